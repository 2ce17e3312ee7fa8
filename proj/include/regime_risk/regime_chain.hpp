#pragma once

// Finite-state continuous-time Markov chain of economic regimes.
//
// Convention: the generator is stored so that E[Z_t | Z_0] = exp(A t) Z_0
// with Z a unit COLUMN vector. Column i therefore holds the rates out of
// state i, off-diagonal entries are non-negative and every column sums to
// zero. Most textbooks use the transposed (row) convention.

#include "regime_risk/errors.hpp"
#include "regime_risk/rng.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace regime_risk {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

class Generator;
class TransitionMatrix;
Generator validate_generator(const Matrix& q);
TransitionMatrix make_transition(const Matrix& p, double dt);

/// Rate matrix of the regime chain (column convention, units 1/time).
/// Only obtainable through validate_generator() or from_transition().
class Generator {
public:
  std::size_t size() const noexcept { return static_cast<std::size_t>(q_.rows()); }
  const Matrix& rates() const noexcept { return q_; }
  double rate(std::size_t to, std::size_t from) const {
    return q_(static_cast<Eigen::Index>(to), static_cast<Eigen::Index>(from));
  }
  /// Total rate of leaving `state`.
  double exit_rate(std::size_t state) const { return -rate(state, state); }

private:
  explicit Generator(Matrix q) : q_(std::move(q)) {}
  friend Generator validate_generator(const Matrix& q);

  Matrix q_;
};

/// Row-stochastic one-step transition matrix over a time step `dt`.
class TransitionMatrix {
public:
  std::size_t size() const noexcept { return static_cast<std::size_t>(p_.rows()); }
  const Matrix& probabilities() const noexcept { return p_; }
  double dt() const noexcept { return dt_; }

private:
  TransitionMatrix(Matrix p, double dt) : p_(std::move(p)), dt_(dt) {}
  friend TransitionMatrix make_transition(const Matrix& p, double dt);

  Matrix p_;
  double dt_;
};

/// Realisation of the chain: state[k] holds on [times[k], times[k+1]).
struct StatePath {
  std::vector<double> times;
  std::vector<std::size_t> states;

  std::size_t state_at(double t) const {
    auto it = std::upper_bound(times.begin(), times.end(), t);
    if (it == times.begin()) return states.front();
    return states[static_cast<std::size_t>(std::distance(times.begin(), it)) - 1];
  }
};

namespace detail {

inline constexpr double kGeneratorSumTol = 1e-9;
inline constexpr double kNegativeClamp = 1e-12;
inline constexpr double kRowSumTol = 1e-6;

inline Matrix matrix_from_rows(const std::vector<std::vector<double>>& rows) {
  const auto n = rows.size();
  Matrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    if (rows[i].size() != n) {
      std::ostringstream os;
      os << "row " << i << " has " << rows[i].size() << " entries, expected " << n;
      throw DimensionError(os.str());
    }
    for (std::size_t j = 0; j < n; ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  }
  return m;
}

}  // namespace detail

/// Checks a rate matrix in the column convention (columns sum to zero).
/// Off-diagonal entries down to -1e-12 are clamped to zero and every
/// diagonal is rebuilt from its column.
inline Generator validate_generator(const Matrix& q) {
  if (q.rows() != q.cols()) {
    std::ostringstream os;
    os << "generator must be square, got " << q.rows() << "x" << q.cols();
    throw DimensionError(os.str());
  }
  if (q.rows() < 1) throw DimensionError("generator must have at least one state");

  Matrix out = q;
  const auto n = q.rows();
  for (Eigen::Index j = 0; j < n; ++j) {
    double col = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double v = q(i, j);
      if (!std::isfinite(v)) {
        std::ostringstream os;
        os << "entry (" << i << "," << j << ") is not finite";
        throw NotAGenerator(os.str());
      }
      if (i != j && v < 0.0) {
        if (v < -detail::kNegativeClamp) {
          std::ostringstream os;
          os << "off-diagonal entry (" << i << "," << j << ") = " << v << " is negative";
          throw NotAGenerator(os.str());
        }
        out(i, j) = 0.0;
      }
      col += v;
    }
    if (q(j, j) > detail::kNegativeClamp) {
      std::ostringstream os;
      os << "diagonal entry (" << j << "," << j << ") = " << q(j, j) << " is positive";
      throw NotAGenerator(os.str());
    }
    if (std::abs(col) > detail::kGeneratorSumTol) {
      std::ostringstream os;
      os << "column " << j << " sums to " << col << ", expected 0 (column convention)";
      throw NotAGenerator(os.str());
    }
    double off = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      if (i != j) off += out(i, j);
    out(j, j) = -off;
  }
  return Generator(std::move(out));
}

inline Generator validate_generator(const std::vector<std::vector<double>>& rows) {
  return validate_generator(detail::matrix_from_rows(rows));
}

inline Generator validate_generator(std::initializer_list<std::initializer_list<double>> rows) {
  return validate_generator(std::vector<std::vector<double>>(rows.begin(), rows.end()));
}

inline TransitionMatrix make_transition(const Matrix& p, double dt) {
  if (p.rows() != p.cols() || p.rows() < 1) {
    std::ostringstream os;
    os << "transition matrix must be square and non-empty, got " << p.rows() << "x" << p.cols();
    throw DimensionError(os.str());
  }
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidParameter("dt must be positive");
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    double sum = 0.0;
    for (Eigen::Index j = 0; j < p.cols(); ++j) {
      const double v = p(i, j);
      if (!(v >= 0.0 && v <= 1.0)) {
        std::ostringstream os;
        os << "entry (" << i << "," << j << ") = " << v << " outside [0,1]";
        throw NotStochastic(os.str());
      }
      sum += v;
    }
    if (std::abs(sum - 1.0) > detail::kRowSumTol) {
      std::ostringstream os;
      os << "row " << i << " sums to " << sum << ", expected 1";
      throw NotStochastic(os.str());
    }
  }
  return TransitionMatrix(p, dt);
}

inline TransitionMatrix make_transition(const std::vector<std::vector<double>>& rows, double dt) {
  return make_transition(detail::matrix_from_rows(rows), dt);
}

inline TransitionMatrix make_transition(std::initializer_list<std::initializer_list<double>> rows,
                                        double dt) {
  return make_transition(std::vector<std::vector<double>>(rows.begin(), rows.end()), dt);
}

/// First-order bridge from a discrete transition matrix to a rate matrix:
/// transpose((P - I) / dt). This is an approximation of the matrix logarithm
/// that is exact to O(dt). Diagonal entries are rebuilt from the column's
/// off-diagonal rates so that round-off in P (rows summing to 1 within 1e-6)
/// does not leak into the generator.
inline Generator from_transition(const TransitionMatrix& p) {
  const auto n = static_cast<Eigen::Index>(p.size());
  Matrix q = (p.probabilities() - Matrix::Identity(n, n)).transpose() / p.dt();
  for (Eigen::Index j = 0; j < n; ++j) {
    double out_rate = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      if (i != j) out_rate += q(i, j);
    q(j, j) = -out_rate;
  }
  return validate_generator(q);
}

namespace detail {

// Diagonal Padé approximant of degree 13 with scaling and squaring.
inline Matrix expm_pade13(const Matrix& a) {
  static constexpr std::array<double, 14> b = {
      64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
      1187353796428800.0,  129060195264000.0,   10559470521600.0,
      670442572800.0,      33522128640.0,       1323241920.0,
      40840800.0,          960960.0,            16380.0,
      182.0,               1.0};
  static constexpr double theta13 = 5.371920351148152;

  const auto n = a.rows();
  const Matrix ident = Matrix::Identity(n, n);
  const double norm = a.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm > theta13) squarings = std::max(0, static_cast<int>(std::ceil(std::log2(norm / theta13))));
  const Matrix x = a / std::ldexp(1.0, squarings);

  const Matrix x2 = x * x;
  const Matrix x4 = x2 * x2;
  const Matrix x6 = x4 * x2;
  const Matrix u_inner = x6 * (b[13] * x6 + b[11] * x4 + b[9] * x2) + b[7] * x6 + b[5] * x4 +
                         b[3] * x2 + b[1] * ident;
  const Matrix u = x * u_inner;
  const Matrix v = x6 * (b[12] * x6 + b[10] * x4 + b[8] * x2) + b[6] * x6 + b[4] * x4 +
                   b[2] * x2 + b[0] * ident;
  Matrix r = (v - u).partialPivLu().solve(v + u);
  for (int k = 0; k < squarings; ++k) r = r * r;
  return r;
}

}  // namespace detail

/// exp(A t). Columns are probability vectors: entry (j, i) is
/// P(Z_t = j | Z_0 = i).
inline Matrix matrix_exp(const Generator& g, double t) {
  if (!(t >= 0.0)) throw TimeOrder("matrix_exp requires t >= 0");
  const auto n = static_cast<Eigen::Index>(g.size());
  if (t == 0.0) return Matrix::Identity(n, n);
  Matrix e = detail::expm_pade13(g.rates() * t);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (e(i, j) < 0.0 && e(i, j) >= -detail::kNegativeClamp) e(i, j) = 0.0;
  return e;
}

/// Law of Z_t given Z_0 ~ p0.
inline Vector distribution_at(const Generator& g, const Vector& p0, double t) {
  if (static_cast<std::size_t>(p0.size()) != g.size()) {
    std::ostringstream os;
    os << "distribution has " << p0.size() << " entries, chain has " << g.size() << " states";
    throw DimensionError(os.str());
  }
  for (Eigen::Index i = 0; i < p0.size(); ++i) {
    if (!(p0(i) >= 0.0)) {
      std::ostringstream os;
      os << "entry " << i << " = " << p0(i) << " is negative";
      throw BadDistribution(os.str());
    }
  }
  if (std::abs(p0.sum() - 1.0) > detail::kGeneratorSumTol) {
    std::ostringstream os;
    os << "distribution sums to " << p0.sum() << ", expected 1";
    throw BadDistribution(os.str());
  }
  return matrix_exp(g, t) * p0;
}

namespace detail {

inline void check_state(const Generator& g, std::size_t z) {
  if (z >= g.size()) {
    std::ostringstream os;
    os << "state " << z << " outside [0," << g.size() << ")";
    throw StateOutOfRange(os.str());
  }
}

// Runs the exact jump chain from `z0` on [start, start + horizon] and calls
// on_jump(time, new_state) at every transition. Returns the final state.
template <class OnJump>
std::size_t run_chain(const Generator& g, std::size_t z0, double start, double horizon,
                      Stream& rng, OnJump&& on_jump) {
  const double end = start + horizon;
  double t = start;
  std::size_t z = z0;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (;;) {
    const double exit = g.exit_rate(z);
    if (!(exit > 0.0)) return z;  // absorbing
    t += std::exponential_distribution<double>(exit)(rng);
    if (t >= end) return z;
    double target = unif(rng) * exit;
    std::size_t next = z;
    for (std::size_t j = 0; j < g.size(); ++j) {
      if (j == z) continue;
      const double r = g.rate(j, z);
      if (r <= 0.0) continue;
      next = j;
      if (target < r) break;
      target -= r;
    }
    z = next;
    on_jump(t, z);
  }
}

}  // namespace detail

/// Exact simulation of the chain on [start, start + horizon]: exponential
/// holding times with rate -q(i,i), jump targets chosen in proportion to the
/// rates in column i.
inline StatePath sample_path(const Generator& g, std::size_t z0, double horizon, Stream& rng,
                             double start = 0.0) {
  detail::check_state(g, z0);
  if (!(horizon > 0.0)) throw TimeOrder("sample_path horizon must be positive");
  StatePath path;
  path.times.push_back(start);
  path.states.push_back(z0);
  detail::run_chain(g, z0, start, horizon, rng, [&](double t, std::size_t z) {
    path.times.push_back(t);
    path.states.push_back(z);
  });
  return path;
}

/// State at start + horizon; same random draws as sample_path without
/// materialising the path.
inline std::size_t sample_terminal_state(const Generator& g, std::size_t z0, double horizon,
                                         Stream& rng) {
  detail::check_state(g, z0);
  if (!(horizon > 0.0)) return z0;
  return detail::run_chain(g, z0, 0.0, horizon, rng, [](double, std::size_t) {});
}

}  // namespace regime_risk
