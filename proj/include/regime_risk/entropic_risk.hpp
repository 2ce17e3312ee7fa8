#pragma once

// Regime-switching entropic risk
//
//   e_gamma(psi) = -gamma ln E[ exp(-psi / gamma) ]
//
// For the linear claim X_T <delta, Z_T> with an OU spot and the regime chain
// independent of the spot driver, conditioning on Z_T gives a Gaussian
// moment generating function per terminal regime:
//
//   phi_j      = exp(-delta_j m / gamma + delta_j^2 v / (2 gamma^2)),
//   lambda_i   = gamma ln ( exp(A^T (T - s)) phi )_i,
//   risk in i  = -lambda_i,
//
// where (m, v) are the conditional mean and variance of X_T given X_s. The
// future reuses the same pipeline with delta scaled by e^{-(r+y)(T-s)}.
// Swap risk has no closed form and is estimated by simulation.

#include "regime_risk/errors.hpp"
#include "regime_risk/instruments.hpp"
#include "regime_risk/ou_model.hpp"
#include "regime_risk/regime_chain.hpp"
#include "regime_risk/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <sstream>
#include <thread>
#include <variant>
#include <vector>

namespace regime_risk {

struct RiskQuery {
  double gamma = 1.0;  // entropic parameter, price units
  double s = 0.0;      // observation time
  double T = 1.0;      // horizon
  double x_s = 0.0;    // spot observed at s

  void check() const {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) {
      std::ostringstream os;
      os << "gamma must be positive, got " << gamma;
      throw NonPositiveGamma(os.str());
    }
    if (!(s >= 0.0 && s < T)) {
      std::ostringstream os;
      os << "need 0 <= s < T, got s=" << s << " T=" << T;
      throw TimeOrder(os.str());
    }
    if (!std::isfinite(x_s)) throw InvalidParameter("observed spot must be finite");
  }
};

/// Per-starting-state lambda_i(s); the risk given Z_s = e_i is -lambda_i.
struct RiskVector {
  std::vector<double> lambda;
  RiskQuery query;

  std::size_t size() const noexcept { return lambda.size(); }
  double risk(std::size_t state) const { return -lambda.at(state); }
  std::vector<double> risks() const {
    std::vector<double> out(lambda.size());
    std::transform(lambda.begin(), lambda.end(), out.begin(), [](double l) { return -l; });
    return out;
  }
};

struct MCEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t n_paths = 0;
  std::uint64_t seed = 0;
};

/// One estimate per starting regime.
using MCRiskVector = std::vector<MCEstimate>;

struct MCSettings {
  std::size_t n_paths = 100000;
  std::uint64_t seed = 0;
  unsigned threads = 0;  // 0: hardware concurrency; results do not depend on it
};

// ---------------------------------------------------------------------------
// Monte-Carlo estimator
// ---------------------------------------------------------------------------

/// Sample entropic risk of `samples`. Exponentials are shifted by the
/// smallest payoff so exp(-psi/gamma) never overflows; the standard error
/// follows from the delta method on the sample mean of exp(-psi/gamma).
inline MCEstimate entropic_mc(std::span<const double> samples, double gamma) {
  if (samples.empty()) throw EmptySamples("entropic_mc needs at least one sample");
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    std::ostringstream os;
    os << "gamma must be positive, got " << gamma;
    throw NonPositiveGamma(os.str());
  }
  const double psi_min = *std::min_element(samples.begin(), samples.end());
  const auto n = samples.size();
  double sum = 0.0;
  for (double psi : samples) sum += std::exp(-(psi - psi_min) / gamma);
  const double mean = sum / static_cast<double>(n);

  double ss = 0.0;
  for (double psi : samples) {
    const double d = std::exp(-(psi - psi_min) / gamma) - mean;
    ss += d * d;
  }
  const double sd = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;

  MCEstimate est;
  est.value = psi_min - gamma * std::log(mean);
  est.std_error = gamma * sd / (std::sqrt(static_cast<double>(n)) * mean);
  est.n_paths = n;
  return est;
}

inline MCEstimate entropic_mc(const std::vector<double>& samples, double gamma) {
  return entropic_mc(std::span<const double>(samples), gamma);
}

// ---------------------------------------------------------------------------
// Closed forms
// ---------------------------------------------------------------------------

namespace detail {

inline constexpr double kLogShiftThreshold = 30.0;

inline void check_loadings(const Generator& g, const std::vector<double>& delta) {
  if (delta.size() != g.size()) {
    std::ostringstream os;
    os << "loading vector has " << delta.size() << " entries, chain has " << g.size() << " states";
    throw DimensionError(os.str());
  }
}

// lambda_i = gamma ln sum_j P(Z_T = j | Z_s = i) phi_j, with log phi_j given.
inline std::vector<double> combine_log_phi(const Generator& g, const std::vector<double>& log_phi,
                                           double gamma, double horizon) {
  const Matrix e = matrix_exp(g, horizon);
  const auto n = g.size();
  double shift = 0.0;
  if (std::any_of(log_phi.begin(), log_phi.end(),
                  [](double v) { return std::abs(v) > kLogShiftThreshold; }))
    shift = *std::max_element(log_phi.begin(), log_phi.end());

  std::vector<double> lambda(n);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      acc += e(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) *
             std::exp(log_phi[j] - shift);
    lambda[i] = gamma * (shift + std::log(acc));
  }
  return lambda;
}

inline RiskVector risk_for_loadings(const OUParams& ou, const Generator& g,
                                    const std::vector<double>& loadings, const RiskQuery& q) {
  q.check();
  check_loadings(g, loadings);
  const auto law = conditional_law(ou, q.x_s, q.s, q.T);
  std::vector<double> log_phi(loadings.size());
  for (std::size_t j = 0; j < loadings.size(); ++j) {
    const double d = loadings[j];
    log_phi[j] = -d * law.mean / q.gamma + d * d * law.variance / (2.0 * q.gamma * q.gamma);
  }
  return RiskVector{combine_log_phi(g, log_phi, q.gamma, q.T - q.s), q};
}

inline double future_discount(const FutureClaim& c, const RiskQuery& q) {
  c.check();
  if (std::abs(c.maturity - q.T) > 1e-12 * std::max(1.0, std::abs(q.T))) {
    std::ostringstream os;
    os << "future maturity " << c.maturity << " differs from risk horizon " << q.T;
    throw TimeOrder(os.str());
  }
  return std::exp(-(c.r + c.y) * (q.T - q.s));
}

}  // namespace detail

/// Closed-form risk of X_T <delta, Z_T> given (X_s, Z_s), for every Z_s.
inline RiskVector spot_risk_closed(const OUParams& ou, const Generator& g,
                                   const std::vector<double>& delta, const RiskQuery& q) {
  return detail::risk_for_loadings(ou, g, delta, q);
}

inline RiskVector spot_risk_closed(const OUParams& ou, const Generator& g, const LinearSpotClaim& c,
                                   const RiskQuery& q) {
  return spot_risk_closed(ou, g, c.delta, q);
}

/// Loadings delta_i e^{-(r+y)(T-s)} that turn the future into a linear claim.
inline std::vector<double> future_effective_loadings(const FutureClaim& c, const RiskQuery& q) {
  const double disc = detail::future_discount(c, q);
  std::vector<double> scaled(c.delta.size());
  std::transform(c.delta.begin(), c.delta.end(), scaled.begin(),
                 [disc](double d) { return d * disc; });
  return scaled;
}

/// Closed-form risk of the future. The returned lambda is Lambda(s).
inline RiskVector future_risk_closed(const OUParams& ou, const Generator& g, const FutureClaim& c,
                                     const RiskQuery& q) {
  q.check();
  return detail::risk_for_loadings(ou, g, future_effective_loadings(c, q), q);
}

/// E[X_T <delta, Z_T> | X_s, Z_s = e_i] for each i. Upper bound of the
/// entropic risk (Jensen).
inline std::vector<double> expected_linear_payoff(const OUParams& ou, const Generator& g,
                                                  const std::vector<double>& delta,
                                                  const RiskQuery& q) {
  q.check();
  detail::check_loadings(g, delta);
  const auto law = conditional_law(ou, q.x_s, q.s, q.T);
  const Matrix e = matrix_exp(g, q.T - q.s);
  std::vector<double> out(g.size(), 0.0);
  for (std::size_t i = 0; i < g.size(); ++i)
    for (std::size_t j = 0; j < g.size(); ++j)
      out[i] += e(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) * delta[j] * law.mean;
  return out;
}

// ---------------------------------------------------------------------------
// Simulation
// ---------------------------------------------------------------------------

namespace detail {

// Fills out[k] = fn(k). Work is split into contiguous blocks; each index is
// computed from its own stream, so the result is the same for any `threads`.
template <class Fn>
std::vector<double> parallel_generate(std::size_t n, unsigned threads, Fn&& fn) {
  std::vector<double> out(n);
  unsigned workers = threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : threads;
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(n, 1)));
  if (workers <= 1) {
    for (std::size_t k = 0; k < n; ++k) out[k] = fn(k);
    return out;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  const std::size_t block = (n + workers - 1) / workers;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        const std::size_t lo = w * block;
        const std::size_t hi = std::min(n, lo + block);
        for (std::size_t k = lo; k < hi; ++k) out[k] = fn(k);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

inline void check_mc(const MCSettings& mc) {
  if (mc.n_paths < 2) throw InvalidParameter("Monte Carlo needs at least 2 paths");
}

// Payoff of a swap path started at (x_start, s_start) in regime z0.
inline double simulate_swap_payoff(const OUParams& ou, const Generator& g, const SwapClaim& c,
                                   double x_start, double s_start, std::size_t z0, Stream& rng) {
  const auto n = c.periods();
  std::vector<double> grid(n + 1);
  for (std::size_t k = 0; k <= n; ++k) grid[k] = s_start + c.settlement_time(k);

  std::vector<double> spots(n);
  std::vector<double> yields;
  if (const auto* gs = std::get_if<GibsonSchwartzParams>(&c.yield)) {
    const auto joint = simulate_spot_yield_path(ou, *gs, grid, rng, x_start, gs->y0);
    std::copy(joint.spots.begin() + 1, joint.spots.end(), spots.begin());
    yields.assign(joint.yields.begin() + 1, joint.yields.end());
  } else {
    double x = x_start;
    for (std::size_t k = 0; k < n; ++k) {
      x = sample_exact(ou, x, grid[k], grid[k + 1], rng);
      spots[k] = x;
    }
  }
  const auto chain = sample_path(g, z0, grid.back() - s_start, rng, s_start);
  std::vector<std::size_t> states(n);
  for (std::size_t k = 0; k < n; ++k) states[k] = chain.state_at(grid[k + 1]);
  return swap_value(spots, states, c, yields);
}

inline MCRiskVector swap_risk_mc_from(const OUParams& ou, const Generator& g, const SwapClaim& c,
                                      double gamma, double x_start, double s_start,
                                      const MCSettings& mc) {
  ou.check();
  c.check();
  check_mc(mc);
  check_loadings(g, c.delta);
  MCRiskVector out;
  for (std::size_t z0 = 0; z0 < g.size(); ++z0) {
    const auto payoffs = parallel_generate(mc.n_paths, mc.threads, [&](std::size_t k) {
      auto rng = Stream::derive(mc.seed, z0, k);
      return simulate_swap_payoff(ou, g, c, x_start, s_start, z0, rng);
    });
    auto est = entropic_mc(payoffs, gamma);
    est.seed = mc.seed;
    out.push_back(est);
  }
  return out;
}

}  // namespace detail

/// Simulated (X_T, Z_T) | (X_s, Z_s) for each starting regime, payoff of a
/// linear or future claim, then entropic_mc. Path k from regime i uses the
/// stream derived from (seed, i, k). A swap claim is simulated over its
/// settlement dates starting at time s.
inline MCRiskVector claim_risk_mc(const OUParams& ou, const Generator& g, const Claim& claim,
                                  const RiskQuery& q, const MCSettings& mc) {
  q.check();
  ou.check();
  detail::check_mc(mc);

  if (const auto* swap = std::get_if<SwapClaim>(&claim))
    return detail::swap_risk_mc_from(ou, g, *swap, q.gamma, q.x_s, q.s, mc);

  // Payoff as a function of (X_T, Z_T).
  if (const auto* lin = std::get_if<LinearSpotClaim>(&claim)) {
    detail::check_loadings(g, lin->delta);
  } else {
    const auto& fut = std::get<FutureClaim>(claim);
    detail::check_loadings(g, fut.delta);
    detail::future_discount(fut, q);
  }
  const double horizon = q.T - q.s;

  MCRiskVector out;
  for (std::size_t z0 = 0; z0 < g.size(); ++z0) {
    const auto payoffs = detail::parallel_generate(mc.n_paths, mc.threads, [&](std::size_t k) {
      auto rng = Stream::derive(mc.seed, z0, k);
      const double x_t = sample_exact(ou, q.x_s, q.s, q.T, rng);
      const std::size_t z_t = sample_terminal_state(g, z0, horizon, rng);
      if (const auto* lin = std::get_if<LinearSpotClaim>(&claim)) return linear_payoff(*lin, x_t, z_t);
      // Discount e^{(r+y)(s-T)} fixed at the observation time s.
      return future_payoff(std::get<FutureClaim>(claim), x_t, z_t, q.s);
    });
    auto est = entropic_mc(payoffs, q.gamma);
    est.seed = mc.seed;
    out.push_back(est);
  }
  return out;
}

/// Swap risk at time 0 from the spot's initial value, per starting regime.
inline MCRiskVector swap_risk_mc(const OUParams& ou, const Generator& g, const SwapClaim& c,
                                 double gamma, const MCSettings& mc) {
  return detail::swap_risk_mc_from(ou, g, c, gamma, ou.x0, 0.0, mc);
}

/// (closed - mc) / se. With a zero standard error the estimate is exact and
/// any difference beyond round-off is an infinite discrepancy.
inline double z_score(double closed, const MCEstimate& mc) {
  const double diff = closed - mc.value;
  if (mc.std_error > 0.0) return diff / mc.std_error;
  if (std::abs(diff) <= 1e-12 * std::max(1.0, std::abs(closed))) return 0.0;
  return std::copysign(std::numeric_limits<double>::infinity(), diff);
}

}  // namespace regime_risk
