#pragma once

// Test-only reference computations. None of these go through the library's
// closed-form code paths.

#include "regime_risk/regime_chain.hpp"

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <random>
#include <vector>

namespace oracle {

/// exp(A t) for the symmetric two-state chain with rate a (eigen-decomposition).
inline Eigen::Matrix2d two_state_exp(double a, double t) {
  const double d = 0.5 * (1.0 + std::exp(-2.0 * a * t));
  const double o = 0.5 * (1.0 - std::exp(-2.0 * a * t));
  Eigen::Matrix2d m;
  m << d, o, o, d;
  return m;
}

/// Eigen's own Padé-based exponential, independent of the library's.
inline Eigen::MatrixXd expm_reference(const Eigen::MatrixXd& a) {
  return a.exp();
}

/// Gaussian certainty equivalent: e_gamma(d X) for X ~ N(m, v).
inline double gaussian_risk(double d, double m, double v, double gamma) {
  return d * m - d * d * v / (2.0 * gamma);
}

/// Risk in each start state when X_T = m is deterministic:
///   -gamma ln sum_j P(j | i) exp(-d_j m / gamma).
inline std::vector<double> deterministic_spot_risk(const Eigen::MatrixXd& transition,
                                                   const std::vector<double>& d, double m,
                                                   double gamma) {
  const auto n = d.size();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    long double acc = 0.0L;
    for (std::size_t j = 0; j < n; ++j)
      acc += transition(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) *
             std::exp(-static_cast<long double>(d[j]) * m / gamma);
    out[i] = static_cast<double>(-gamma * std::log(acc));
  }
  return out;
}

/// Random generator (column convention) with off-diagonal rates in [lo, hi].
template <class Rng>
Eigen::MatrixXd random_generator(std::size_t n, double lo, double hi, Rng& rng) {
  std::uniform_real_distribution<double> u(lo, hi);
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (Eigen::Index j = 0; j < q.cols(); ++j) {
    double out = 0.0;
    for (Eigen::Index i = 0; i < q.rows(); ++i) {
      if (i == j) continue;
      q(i, j) = u(rng);
      out += q(i, j);
    }
    q(j, j) = -out;
  }
  return q;
}

}  // namespace oracle
