#pragma once

// Mean-reverting spot process dX = alpha (mu - X) dt + sigma dB.
// Time is measured in years throughout.

#include "regime_risk/errors.hpp"
#include "regime_risk/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace regime_risk {

inline constexpr double kTradingDaysPerYear = 252.0;

struct OUParams {
  double alpha = 1.0;  // reversion rate, 1/year
  double mu = 0.0;     // long-run mean
  double sigma = 0.0;  // volatility, price / sqrt(year)
  double x0 = 0.0;     // initial spot

  void check() const {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw InvalidParameter("OU alpha must be positive");
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw InvalidParameter("OU sigma must be non-negative");
    if (!std::isfinite(mu) || !std::isfinite(x0)) throw InvalidParameter("OU mu and x0 must be finite");
  }

  double stationary_variance() const { return sigma * sigma / (2.0 * alpha); }
};

/// Gaussian law of X_t given X_s. `variance` is the variance, not a
/// standard deviation.
struct ConditionalLaw {
  double mean = 0.0;
  double variance = 0.0;
};

inline ConditionalLaw conditional_law(const OUParams& p, double x_s, double s, double t) {
  p.check();
  if (!(t >= s)) {
    std::ostringstream os;
    os << "conditional law needs t >= s, got s=" << s << " t=" << t;
    throw TimeOrder(os.str());
  }
  const double tau = t - s;
  const double decay = std::exp(-p.alpha * tau);
  // -expm1 keeps 1 - e^{-x} accurate for short horizons.
  const double var = p.stationary_variance() * -std::expm1(-2.0 * p.alpha * tau);
  return {x_s * decay + p.mu * -std::expm1(-p.alpha * tau), var};
}

/// Draw X_t | X_s from the exact transition law.
inline double sample_exact(const OUParams& p, double x_s, double s, double t, Stream& rng) {
  const auto law = conditional_law(p, x_s, s, t);
  std::normal_distribution<double> normal(0.0, 1.0);
  return law.mean + std::sqrt(law.variance) * normal(rng);
}

/// Exact transitions along `grid`, which must start at 0 and be
/// non-decreasing. Returns one value per grid point, beginning with x0.
inline std::vector<double> simulate_path(const OUParams& p, const std::vector<double>& grid,
                                         Stream& rng) {
  p.check();
  if (grid.empty()) throw InvalidParameter("simulation grid is empty");
  if (grid.front() != 0.0) throw InvalidParameter("simulation grid must start at 0");
  std::vector<double> out;
  out.reserve(grid.size());
  out.push_back(p.x0);
  for (std::size_t k = 1; k < grid.size(); ++k)
    out.push_back(sample_exact(p, out.back(), grid[k - 1], grid[k], rng));
  return out;
}

/// Daily grid 0, 1/252, ..., steps/252.
inline std::vector<double> daily_grid(std::size_t steps, double days_per_year = kTradingDaysPerYear) {
  std::vector<double> g(steps + 1);
  for (std::size_t k = 0; k <= steps; ++k) g[k] = static_cast<double>(k) / days_per_year;
  return g;
}

// ---------------------------------------------------------------------------
// Historical price series
// ---------------------------------------------------------------------------

struct PriceSeries {
  std::vector<std::chrono::year_month_day> dates;
  std::vector<double> prices;
  double dt = 1.0 / kTradingDaysPerYear;  // years between consecutive observations

  std::size_t size() const noexcept { return prices.size(); }

  /// Mean calendar spacing between observations, in days.
  double mean_calendar_spacing_days() const {
    if (dates.size() < 2) return 0.0;
    const auto first = std::chrono::sys_days(dates.front());
    const auto last = std::chrono::sys_days(dates.back());
    return static_cast<double>((last - first).count()) / static_cast<double>(dates.size() - 1);
  }
};

namespace detail {

inline std::chrono::year_month_day parse_iso_date(const std::string& s, std::size_t row) {
  int y = 0;
  unsigned m = 0;
  unsigned d = 0;
  char tail = 0;
  if (s.size() != 10 || std::sscanf(s.c_str(), "%4d-%2u-%2u%c", &y, &m, &d, &tail) != 3) {
    std::ostringstream os;
    os << "row " << row << ": bad date '" << s << "', expected YYYY-MM-DD";
    throw ParseError(os.str());
  }
  std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!ymd.ok()) {
    std::ostringstream os;
    os << "row " << row << ": invalid calendar date '" << s << "'";
    throw ParseError(os.str());
  }
  return ymd;
}

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\"");
  const auto e = s.find_last_not_of(" \t\r\"");
  return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
}

}  // namespace detail

/// Reads `date,price` CSV (header required, ISO-8601 dates, strictly
/// increasing, positive prices). Rows are numbered from 1 = header.
inline PriceSeries read_price_csv(std::istream& in, double dt = 1.0 / kTradingDaysPerYear) {
  if (!(dt > 0.0)) throw InvalidParameter("dt must be positive");
  PriceSeries series;
  series.dt = dt;
  std::string line;
  std::size_t row = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++row;
    if (detail::trim(line).empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      std::ostringstream os;
      os << "row " << row << ": expected two comma-separated fields";
      throw ParseError(os.str());
    }
    const auto first = detail::trim(line.substr(0, comma));
    const auto second = detail::trim(line.substr(comma + 1));
    if (!header_seen) {
      if (first != "date" || second != "price")
        throw ParseError("row 1: header must be 'date,price'");
      header_seen = true;
      continue;
    }
    const auto date = detail::parse_iso_date(first, row);
    double price = 0.0;
    std::size_t used = 0;
    try {
      price = std::stod(second, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != second.size() || !std::isfinite(price)) {
      std::ostringstream os;
      os << "row " << row << ": bad price '" << second << "'";
      throw ParseError(os.str());
    }
    if (!(price > 0.0)) {
      std::ostringstream os;
      os << "row " << row << ": price must be positive, got " << price;
      throw ParseError(os.str());
    }
    if (!series.dates.empty() && !(date > series.dates.back())) {
      std::ostringstream os;
      os << "row " << row << ": date " << first << " is not after the previous row (dates must be strictly increasing)";
      throw ParseError(os.str());
    }
    series.dates.push_back(date);
    series.prices.push_back(price);
  }
  if (!header_seen) throw ParseError("empty file: header 'date,price' missing");
  return series;
}

inline PriceSeries read_price_csv(const std::string& path, double dt = 1.0 / kTradingDaysPerYear) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open price file '" + path + "'");
  return read_price_csv(in, dt);
}

// ---------------------------------------------------------------------------
// Calibration
// ---------------------------------------------------------------------------

struct OUStdErrors {
  double alpha = 0.0;
  double mu = 0.0;
  double sigma = 0.0;
};

struct Calibration {
  OUParams params;
  OUStdErrors std_errors;
  double slope = 0.0;      // b in X_{k+1} = c + b X_k + e
  double intercept = 0.0;  // c
  double residual_variance = 0.0;
  std::size_t n_obs = 0;
  double dt = 0.0;
  // Dickey-Fuller statistic (b - 1) / se(b). Values above the critical
  // value mean a random walk cannot be ruled out at that level.
  double unit_root_stat = 0.0;
};

struct CalibrationOptions {
  // Treat "unit root not rejected" as not mean reverting.
  bool reject_unit_root = false;
  // Asymptotic 5% critical value, regression with constant, no trend.
  double unit_root_critical = -2.86;
};

/// Least squares on the exact AR(1) discretisation
///   X_{k+1} = c + b X_k + e,   b = exp(-alpha dt),
/// mapped back to (alpha, mu, sigma). Standard errors come from the OLS
/// covariance via the delta method; the residual scale is treated as
/// asymptotically independent of (c, b).
inline Calibration calibrate(const std::vector<double>& prices, double dt,
                             const CalibrationOptions& options = {}) {
  if (prices.size() < 3) {
    std::ostringstream os;
    os << "calibration needs at least 3 observations, got " << prices.size();
    throw TooFewPoints(os.str());
  }
  if (!(dt > 0.0)) throw InvalidParameter("dt must be positive");

  const std::size_t m = prices.size() - 1;
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    mx += prices[k];
    my += prices[k + 1];
  }
  mx /= static_cast<double>(m);
  my /= static_cast<double>(m);
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    sxx += (prices[k] - mx) * (prices[k] - mx);
    sxy += (prices[k] - mx) * (prices[k + 1] - my);
  }
  if (!(sxx > 0.0))
    throw NotMeanReverting("series has zero variance; reversion rate is not identifiable");

  const double b = sxy / sxx;
  const double c = my - b * mx;
  if (!(b > 0.0 && b < 1.0)) {
    std::ostringstream os;
    os << "fitted AR(1) slope b = " << b << " is outside (0,1); alpha = -ln(b)/dt is undefined";
    throw NotMeanReverting(os.str());
  }

  double sse = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    const double e = prices[k + 1] - c - b * prices[k];
    sse += e * e;
  }
  const double dof = m > 2 ? static_cast<double>(m - 2) : 1.0;
  const double s2 = sse / dof;

  const double var_b = s2 / sxx;
  const double var_c = s2 * (1.0 / static_cast<double>(m) + mx * mx / sxx);
  const double cov_cb = -mx * s2 / sxx;
  const double df_stat = var_b > 0.0 ? (b - 1.0) / std::sqrt(var_b)
                                     : -std::numeric_limits<double>::infinity();
  if (options.reject_unit_root && df_stat > options.unit_root_critical) {
    std::ostringstream os;
    os << "unit root not rejected: Dickey-Fuller statistic " << df_stat << " > "
       << options.unit_root_critical;
    throw NotMeanReverting(os.str());
  }

  Calibration out;
  out.slope = b;
  out.intercept = c;
  out.residual_variance = s2;
  out.n_obs = prices.size();
  out.dt = dt;
  out.unit_root_stat = df_stat;

  const double alpha = -std::log(b) / dt;
  const double mu = c / (1.0 - b);
  const double one_minus_b2 = 1.0 - b * b;
  // sigma^2 = s^2 h(b),  h(b) = -2 ln(b) / (dt (1 - b^2))
  const double h = -2.0 * std::log(b) / (dt * one_minus_b2);
  const double sigma = std::sqrt(s2 * h);
  out.params = OUParams{alpha, mu, sigma, prices.front()};

  out.std_errors.alpha = std::sqrt(var_b) / (b * dt);

  const double dmu_dc = 1.0 / (1.0 - b);
  const double dmu_db = c / ((1.0 - b) * (1.0 - b));
  out.std_errors.mu =
      std::sqrt(std::max(0.0, dmu_dc * dmu_dc * var_c + 2.0 * dmu_dc * dmu_db * cov_cb +
                                  dmu_db * dmu_db * var_b));

  const double dh_db =
      (-2.0 / dt) * ((1.0 - b * b) / b + 2.0 * b * std::log(b)) / (one_minus_b2 * one_minus_b2);
  const double s = std::sqrt(s2);
  const double var_s = s2 / (2.0 * dof);
  const double dsigma_db = h > 0.0 ? s * dh_db / (2.0 * std::sqrt(h)) : 0.0;
  out.std_errors.sigma = std::sqrt(h * var_s + dsigma_db * dsigma_db * var_b);
  return out;
}

inline Calibration calibrate(const PriceSeries& series, const CalibrationOptions& options = {}) {
  return calibrate(series.prices, series.dt, options);
}

}  // namespace regime_risk
