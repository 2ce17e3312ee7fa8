#pragma once

// Commodity claims driven by the spot X and the regime Z:
//   linear spot claim   S_t = X_t <delta, Z_t>
//   future              e^{(r+y)(t-T)} X_t <delta, Z_t>
//   commodity swap      W_T = sum_k e^{-r_k} X_k (e^{Y^Z_k (t_k - T)} - 1)
// plus the convenience-yield process used by the swap.

#include "regime_risk/errors.hpp"
#include "regime_risk/ou_model.hpp"
#include "regime_risk/rng.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <variant>
#include <vector>

namespace regime_risk {

struct LinearSpotClaim {
  std::vector<double> delta;  // per-regime loading
};

struct FutureClaim {
  std::vector<double> delta;
  double r = 0.0;          // risk-free rate, 1/year
  double y = 0.0;          // convenience yield, 1/year
  double maturity = 0.0;   // T, years
  double carry_cost = 0.0; // c_t; only 0 is supported

  void check() const {
    if (carry_cost != 0.0) throw NotSupported("non-zero cost of carry");
    if (!(maturity > 0.0)) throw InvalidParameter("future maturity must be positive");
  }
};

/// Gibson-Schwartz convenience yield. Under the historical measure
///   dY = kappa (y_hat - Y - lambda_y) dt + sigma_y dB,  y_hat = y_bar - lambda_y / kappa.
struct GibsonSchwartzParams {
  double kappa = 1.0;
  double y_bar = 0.0;     // risk-neutral yield level
  double sigma_y = 0.0;
  double rho = 0.0;       // correlation with the spot driver
  double lambda_y = 0.0;  // market price of yield risk
  double y0 = 0.0;

  void check() const {
    if (!(kappa > 0.0)) throw InvalidParameter("Gibson-Schwartz kappa must be positive");
    if (!(sigma_y >= 0.0)) throw InvalidParameter("Gibson-Schwartz sigma_y must be non-negative");
    if (!(std::abs(rho) <= 1.0)) throw InvalidParameter("Gibson-Schwartz rho must lie in [-1,1]");
  }

  double y_hat() const { return y_bar - lambda_y / kappa; }
  /// Long-run level of Y under the historical measure.
  double historical_level() const { return y_hat() - lambda_y; }
};

/// Constant yield: Y_t = r + y in every period.
struct ConstantYield {
  double r = 0.0;
  double y = 0.0;
};

using YieldSpec = std::variant<ConstantYield, GibsonSchwartzParams>;

struct SwapClaim {
  std::vector<double> delta;
  std::vector<double> rates;  // r_k, one per settlement k = 1..T; discount is e^{-r_k}
  double period = 1.0 / 12.0; // years between settlements
  YieldSpec yield = ConstantYield{};
  double carry_cost = 0.0;

  std::size_t periods() const noexcept { return rates.size(); }
  double settlement_time(std::size_t k) const { return static_cast<double>(k) * period; }

  void check() const {
    if (carry_cost != 0.0) throw NotSupported("non-zero cost of carry");
    if (rates.empty()) throw InvalidParameter("swap needs at least one settlement period");
    if (!(period > 0.0)) throw InvalidParameter("swap period must be positive");
    if (const auto* gs = std::get_if<GibsonSchwartzParams>(&yield)) gs->check();
  }
};

using Claim = std::variant<LinearSpotClaim, FutureClaim, SwapClaim>;

namespace detail {

inline double loading(const std::vector<double>& delta, std::size_t z) {
  if (z >= delta.size()) {
    std::ostringstream os;
    os << "state " << z << " outside [0," << delta.size() << ")";
    throw StateOutOfRange(os.str());
  }
  return delta[z];
}

}  // namespace detail

inline double linear_payoff(const LinearSpotClaim& c, double x, std::size_t z) {
  return x * detail::loading(c.delta, z);
}

inline double future_payoff(const FutureClaim& c, double x, std::size_t z, double t) {
  c.check();
  if (!(t <= c.maturity)) {
    std::ostringstream os;
    os << "future evaluated at t=" << t << " after maturity " << c.maturity;
    throw TimeOrder(os.str());
  }
  return std::exp((c.r + c.y) * (t - c.maturity)) * x * detail::loading(c.delta, z);
}

/// Regime-modulated yield Y^Z_k = Y_k <delta, Z_k> for settlement k (0-based).
inline double modulated_yield(const SwapClaim& c, std::size_t k, std::size_t z,
                              const std::vector<double>& yields) {
  const double d = detail::loading(c.delta, z);
  if (const auto* cy = std::get_if<ConstantYield>(&c.yield)) return (cy->r + cy->y) * d;
  return yields[k] * d;
}

/// e^{Y^Z_k (t_k - t_T)} - 1 for settlement k (0-based).
inline double settlement_factor(const SwapClaim& c, std::size_t k, std::size_t z,
                                const std::vector<double>& yields = {}) {
  const double t_k = c.settlement_time(k + 1);
  const double t_end = c.settlement_time(c.periods());
  return std::expm1(modulated_yield(c, k, z, yields) * (t_k - t_end));
}

/// Discounted cash settlement w_k = e^{-r_k} X_k (e^{Y^Z_k (t_k - T)} - 1).
inline double settlement(const SwapClaim& c, std::size_t k, double x, std::size_t z,
                         const std::vector<double>& yields = {}) {
  return std::exp(-c.rates[k]) * x * settlement_factor(c, k, z, yields);
}

/// W_T from spot, regime and (for a stochastic yield) yield values sampled
/// at the settlement dates 1..T.
inline double swap_value(const std::vector<double>& spots, const std::vector<std::size_t>& states,
                         const SwapClaim& c, const std::vector<double>& yields = {}) {
  c.check();
  const auto n = c.periods();
  if (spots.size() != n || states.size() != n) {
    std::ostringstream os;
    os << "swap has " << n << " periods but got " << spots.size() << " spots and "
       << states.size() << " states";
    throw LengthMismatch(os.str());
  }
  if (std::holds_alternative<GibsonSchwartzParams>(c.yield) && yields.size() != n) {
    std::ostringstream os;
    os << "stochastic yield needs " << n << " yield values, got " << yields.size();
    throw LengthMismatch(os.str());
  }
  double w = 0.0;
  for (std::size_t k = 0; k < n; ++k) w += settlement(c, k, spots[k], states[k], yields);
  return w;
}

namespace detail {

inline void check_grid(const std::vector<double>& grid) {
  if (grid.empty()) throw InvalidParameter("simulation grid is empty");
  for (std::size_t k = 1; k < grid.size(); ++k)
    if (grid[k] < grid[k - 1]) {
      std::ostringstream os;
      os << "grid decreases at index " << k;
      throw TimeOrder(os.str());
    }
}

}  // namespace detail

/// Exact OU transitions of the convenience yield under the historical
/// measure, starting from y0 at grid[0].
inline std::vector<double> simulate_yield_path(const GibsonSchwartzParams& p,
                                               const std::vector<double>& grid, Stream& rng) {
  p.check();
  detail::check_grid(grid);
  const double level = p.historical_level();
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> out{p.y0};
  out.reserve(grid.size());
  for (std::size_t k = 1; k < grid.size(); ++k) {
    const double tau = grid[k] - grid[k - 1];
    const double decay = std::exp(-p.kappa * tau);
    const double sd = p.sigma_y * std::sqrt(-std::expm1(-2.0 * p.kappa * tau) / (2.0 * p.kappa));
    out.push_back(out.back() * decay + level * -std::expm1(-p.kappa * tau) + sd * normal(rng));
  }
  return out;
}

struct SpotYieldPath {
  std::vector<double> spots;
  std::vector<double> yields;
};

/// Joint exact simulation of the spot OU and the yield OU when their
/// Brownian drivers have correlation rho. The two-dimensional Gaussian
/// increment uses the exact covariance
///   rho sigma sigma_y (1 - e^{-(alpha + kappa) tau}) / (alpha + kappa).
inline SpotYieldPath simulate_spot_yield_path(const OUParams& ou, const GibsonSchwartzParams& gs,
                                              const std::vector<double>& grid, Stream& rng,
                                              double x_start, double y_start) {
  ou.check();
  gs.check();
  detail::check_grid(grid);
  const double level = gs.historical_level();
  std::normal_distribution<double> normal(0.0, 1.0);
  SpotYieldPath path;
  path.spots.reserve(grid.size());
  path.yields.reserve(grid.size());
  path.spots.push_back(x_start);
  path.yields.push_back(y_start);
  for (std::size_t k = 1; k < grid.size(); ++k) {
    const double tau = grid[k] - grid[k - 1];
    const auto law = conditional_law(ou, path.spots.back(), grid[k - 1], grid[k]);
    const double y_mean =
        path.yields.back() * std::exp(-gs.kappa * tau) + level * -std::expm1(-gs.kappa * tau);
    const double var_y =
        gs.sigma_y * gs.sigma_y * -std::expm1(-2.0 * gs.kappa * tau) / (2.0 * gs.kappa);
    const double cov = gs.rho * ou.sigma * gs.sigma_y *
                       -std::expm1(-(ou.alpha + gs.kappa) * tau) / (ou.alpha + gs.kappa);
    const double l11 = std::sqrt(law.variance);
    const double l21 = l11 > 0.0 ? cov / l11 : 0.0;
    const double l22 = std::sqrt(std::max(0.0, var_y - l21 * l21));
    const double e1 = normal(rng);
    const double e2 = normal(rng);
    path.spots.push_back(law.mean + l11 * e1);
    path.yields.push_back(y_mean + l21 * e1 + l22 * e2);
  }
  return path;
}

}  // namespace regime_risk
