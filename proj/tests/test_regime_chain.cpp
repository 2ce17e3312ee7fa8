#include "oracles.hpp"
#include "regime_risk/regime_chain.hpp"

#include <gtest/gtest.h>

#include <boost/math/distributions/chi_squared.hpp>

#include <random>
#include <vector>

using namespace regime_risk;

namespace {

// Four-state daily matrix whose third row sums to 0.95.
const std::vector<std::vector<double>> kDefectiveMatrix = {
    {0.75, 0.25, 0.0, 0.0},
    {0.25, 0.75, 0.0, 0.0},
    {0.0, 0.0, 0.25, 0.7},
    {0.0, 0.0, 0.75, 0.25}};

Generator symmetric(double a) { return validate_generator({{-a, a}, {a, -a}}); }

}  // namespace

TEST(ValidateGenerator, AcceptsZeroSingleState) {
  const auto g = validate_generator({{0.0}});
  EXPECT_EQ(g.size(), 1u);
  EXPECT_EQ(g.exit_rate(0), 0.0);
}

TEST(ValidateGenerator, AcceptsSymmetricTwoState) {
  const auto g = symmetric(0.5);
  EXPECT_DOUBLE_EQ(g.rate(1, 0), 0.5);
  EXPECT_DOUBLE_EQ(g.exit_rate(1), 0.5);
}

TEST(ValidateGenerator, RejectsRowStochasticMatrix) {
  EXPECT_THROW(validate_generator(kDefectiveMatrix), NotAGenerator);
}

TEST(ValidateGenerator, RejectsNonSquare) {
  Matrix m(2, 3);
  m.setZero();
  EXPECT_THROW(validate_generator(m), DimensionError);
  EXPECT_THROW(validate_generator(std::vector<std::vector<double>>{{0.0, 0.0}, {0.0}}), DimensionError);
}

TEST(ValidateGenerator, RejectsRowConvention) {
  // Rows sum to zero but columns do not.
  EXPECT_THROW(validate_generator({{-1.0, 1.0}, {2.0, -2.0}}), NotAGenerator);
}

TEST(ValidateGenerator, ReportsNegativeOffDiagonal) {
  try {
    validate_generator({{1.0, -1.0}, {-1.0, 1.0}});
    FAIL() << "expected NotAGenerator";
  } catch (const NotAGenerator& e) {
    EXPECT_NE(std::string(e.what()).find("(1,0)"), std::string::npos) << e.what();
  }
}

TEST(ValidateGenerator, ClampsTinyNegativeOffDiagonal) {
  const auto g = validate_generator({{-1.0, -1e-13}, {1.0, 1e-13}});
  EXPECT_EQ(g.rate(0, 1), 0.0);
}

TEST(FromTransition, IdentityGivesZeroGenerator) {
  const auto g = from_transition(make_transition({{1.0, 0.0}, {0.0, 1.0}}, 1.0));
  EXPECT_TRUE(g.rates().isZero(0.0));
}

TEST(FromTransition, TwoStateHandComputation) {
  const auto g = from_transition(make_transition({{0.75, 0.25}, {0.25, 0.75}}, 1.0));
  EXPECT_DOUBLE_EQ(g.rate(0, 1), 0.25);
  EXPECT_DOUBLE_EQ(g.rate(1, 0), 0.25);
  EXPECT_DOUBLE_EQ(g.rate(0, 0), -0.25);
  EXPECT_NEAR(g.rates().colwise().sum().cwiseAbs().maxCoeff(), 0.0, 1e-15);
}

TEST(FromTransition, ColumnsOfGeneratorHoldRowsOfTransition) {
  // P(0 -> 1) = 0.3 per unit step becomes the rate in column 0, row 1.
  const auto g = from_transition(make_transition({{0.7, 0.3}, {0.1, 0.9}}, 0.5));
  EXPECT_DOUBLE_EQ(g.rate(1, 0), 0.6);
  EXPECT_DOUBLE_EQ(g.rate(0, 1), 0.2);
}

TEST(FromTransition, DefectiveRowTwoIsNotStochastic) {
  try {
    make_transition(kDefectiveMatrix, 1.0 / 252.0);
    FAIL() << "expected NotStochastic";
  } catch (const NotStochastic& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("row 2"), std::string::npos) << msg;
    EXPECT_NE(msg.find("0.95"), std::string::npos) << msg;
  }
}

TEST(FromTransition, CorrectedMatrixIsAccepted) {
  auto rows = kDefectiveMatrix;
  rows[2][3] = 0.75;
  const auto g = from_transition(make_transition(rows, 1.0 / 252.0));
  EXPECT_NEAR(g.rate(3, 2), 0.75 * 252.0, 1e-9);
}

TEST(MatrixExp, ZeroTimeIsIdentity) {
  std::mt19937_64 rng(3);
  const auto g = validate_generator(oracle::random_generator(4, 0.1, 2.0, rng));
  EXPECT_TRUE(matrix_exp(g, 0.0).isIdentity(0.0));
}

TEST(MatrixExp, SymmetricTwoStateMatchesAnalytic) {
  for (double a : {0.1, 0.5, 2.0, 40.0}) {
    for (double t : {1e-4, 0.3, 1.0, 7.5}) {
      const auto got = matrix_exp(symmetric(a), t);
      const auto want = oracle::two_state_exp(a, t);
      EXPECT_LE((got - want).cwiseAbs().maxCoeff(), 1e-12) << "a=" << a << " t=" << t;
    }
  }
}

TEST(MatrixExp, BlockDiagonalStaysBlockDiagonal) {
  Matrix q = Matrix::Zero(4, 4);
  q.block(0, 0, 2, 2) << -0.5, 0.5, 0.5, -0.5;
  q.block(2, 2, 2, 2) << -1.5, 0.25, 1.5, -0.25;
  const auto e = matrix_exp(validate_generator(q), 2.0);
  EXPECT_EQ(e.block(0, 2, 2, 2).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(e.block(2, 0, 2, 2).cwiseAbs().maxCoeff(), 0.0);
  const Matrix b1 = oracle::expm_reference(q.block(0, 0, 2, 2) * 2.0);
  const Matrix b2 = oracle::expm_reference(q.block(2, 2, 2, 2) * 2.0);
  EXPECT_LE((e.block(0, 0, 2, 2) - b1).cwiseAbs().maxCoeff(), 1e-13);
  EXPECT_LE((e.block(2, 2, 2, 2) - b2).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(MatrixExp, AgreesWithIndependentExpm) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + trial % 6;
    const Matrix q = oracle::random_generator(n, 0.1, 5.0, rng);
    const double t = 0.01 + 0.2 * trial;
    const auto got = matrix_exp(validate_generator(q), t);
    EXPECT_LE((got - oracle::expm_reference(q * t)).cwiseAbs().maxCoeff(), 1e-11);
  }
}

TEST(MatrixExp, ColumnsAreProbabilityVectors) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + trial % 8;
    const auto g = validate_generator(oracle::random_generator(n, 0.0, 3.0, rng));
    const double t = std::ldexp(1.0, trial % 12 - 6);
    const auto e = matrix_exp(g, t);
    for (Eigen::Index j = 0; j < e.cols(); ++j) EXPECT_NEAR(e.col(j).sum(), 1.0, 1e-10);
    EXPECT_GE(e.minCoeff(), 0.0);
  }
}

TEST(MatrixExp, SemigroupProperty) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  for (int trial = 0; trial < 100; ++trial) {
    const auto g = validate_generator(oracle::random_generator(1 + trial % 5, 0.05, 2.0, rng));
    const double s = u(rng);
    const double t = u(rng);
    const Matrix lhs = matrix_exp(g, s + t);
    const Matrix rhs = matrix_exp(g, s) * matrix_exp(g, t);
    EXPECT_LE((lhs - rhs).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(MatrixExp, NegativeTimeRejected) {
  EXPECT_THROW(matrix_exp(symmetric(1.0), -1.0), TimeOrder);
}

TEST(DistributionAt, ZeroTimeLeavesDistribution) {
  Vector p0(2);
  p0 << 0.3, 0.7;
  EXPECT_TRUE(distribution_at(symmetric(1.0), p0, 0.0).isApprox(p0, 0.0));
}

TEST(DistributionAt, SymmetricChainApproachesUniform) {
  Vector p0(2);
  p0 << 1.0, 0.0;
  const auto p = distribution_at(symmetric(0.7), p0, 50.0);
  EXPECT_NEAR(p(0), 0.5, 1e-12);
  EXPECT_NEAR(p(1), 0.5, 1e-12);
}

TEST(DistributionAt, UnitVectorsGiveColumns) {
  std::mt19937_64 rng(23);
  const auto g = validate_generator(oracle::random_generator(4, 0.1, 2.0, rng));
  const auto e = matrix_exp(g, 0.8);
  for (Eigen::Index i = 0; i < 4; ++i) {
    const Vector p = distribution_at(g, Vector::Unit(4, i), 0.8);
    EXPECT_LE((p - e.col(i)).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_NEAR(p.sum(), 1.0, 1e-9);
  }
}

TEST(DistributionAt, RejectsBadDistributions) {
  Vector bad(2);
  bad << 0.6, 0.6;
  EXPECT_THROW(distribution_at(symmetric(1.0), bad, 1.0), BadDistribution);
  bad << 1.5, -0.5;
  EXPECT_THROW(distribution_at(symmetric(1.0), bad, 1.0), BadDistribution);
  EXPECT_THROW(distribution_at(symmetric(1.0), Vector::Ones(3) / 3.0, 1.0), DimensionError);
}

TEST(SamplePath, ZeroGeneratorNeverMoves) {
  auto rng = Stream(1);
  const auto path = sample_path(validate_generator({{0.0, 0.0}, {0.0, 0.0}}), 1, 100.0, rng);
  ASSERT_EQ(path.states.size(), 1u);
  EXPECT_EQ(path.states[0], 1u);
  EXPECT_EQ(path.times[0], 0.0);
  EXPECT_EQ(path.state_at(99.0), 1u);
}

TEST(SamplePath, TimesIncreaseAndStartAtOrigin) {
  auto rng = Stream(2);
  const auto path = sample_path(symmetric(3.0), 0, 10.0, rng, 1.5);
  EXPECT_EQ(path.times.front(), 1.5);
  for (std::size_t k = 1; k < path.times.size(); ++k) {
    EXPECT_GT(path.times[k], path.times[k - 1]);
    EXPECT_LT(path.times[k], 11.5);
    EXPECT_NE(path.states[k], path.states[k - 1]);
  }
}

TEST(SamplePath, DeterministicGivenSeed) {
  auto a = Stream::derive(9, 4);
  auto b = Stream::derive(9, 4);
  const auto pa = sample_path(symmetric(2.0), 0, 20.0, a);
  const auto pb = sample_path(symmetric(2.0), 0, 20.0, b);
  EXPECT_EQ(pa.times, pb.times);
  EXPECT_EQ(pa.states, pb.states);
}

TEST(SamplePath, TerminalStateMatchesFullPath) {
  std::mt19937_64 gen(1);
  const auto g = validate_generator(oracle::random_generator(3, 0.2, 2.0, gen));
  for (std::uint64_t k = 0; k < 200; ++k) {
    auto a = Stream::derive(5, k);
    auto b = Stream::derive(5, k);
    EXPECT_EQ(sample_path(g, k % 3, 1.7, a).states.back(), sample_terminal_state(g, k % 3, 1.7, b));
  }
}

TEST(SamplePath, LongRunOccupationOfSymmetricChain) {
  auto rng = Stream(31);
  const double horizon = 20000.0;
  const auto path = sample_path(symmetric(1.0), 0, horizon, rng);
  double in_zero = 0.0;
  for (std::size_t k = 0; k < path.times.size(); ++k) {
    const double end = k + 1 < path.times.size() ? path.times[k + 1] : horizon;
    if (path.states[k] == 0) in_zero += end - path.times[k];
  }
  // Occupation-time variance of a two-state chain: p(1-p) / (a+b) * 2 / horizon.
  const double sd = std::sqrt(0.25 * 2.0 / (2.0 * horizon));
  EXPECT_NEAR(in_zero / horizon, 0.5, 4.0 * sd);
}

TEST(SamplePath, JumpCountMatchesExitRate) {
  // Jumps of an absorbing-free two-state chain with equal rates form a
  // Poisson process of intensity a.
  const double a = 1.3;
  const double horizon = 2.0;
  const int paths = 20000;
  double total = 0.0;
  for (int k = 0; k < paths; ++k) {
    auto rng = Stream::derive(77, static_cast<std::uint64_t>(k));
    total += static_cast<double>(sample_path(symmetric(a), 0, horizon, rng).times.size() - 1);
  }
  const double mean = total / paths;
  EXPECT_NEAR(mean, a * horizon, 4.0 * std::sqrt(a * horizon / paths));
}

TEST(SamplePath, EmpiricalLawMatchesDistributionAt) {
  std::mt19937_64 gen(41);
  for (std::size_t n : {2u, 3u, 4u}) {
    const auto g = validate_generator(oracle::random_generator(n, 0.1, 2.0, gen));
    const std::size_t z0 = n - 1;
    const double t = 0.9;
    const int paths = 10000;
    std::vector<double> counts(n, 0.0);
    for (int k = 0; k < paths; ++k) {
      auto rng = Stream::derive(1234 + n, static_cast<std::uint64_t>(k));
      counts[sample_path(g, z0, t, rng).state_at(t)] += 1.0;
    }
    const Vector p = distribution_at(g, Vector::Unit(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(z0)), t);
    double chi2 = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double expected = paths * p(static_cast<Eigen::Index>(j));
      chi2 += (counts[j] - expected) * (counts[j] - expected) / expected;
    }
    const boost::math::chi_squared dist(static_cast<double>(n - 1));
    EXPECT_LT(chi2, boost::math::quantile(boost::math::complement(dist, 0.01))) << "n=" << n;
  }
}

TEST(SamplePath, StateOutOfRange) {
  auto rng = Stream(1);
  EXPECT_THROW(sample_path(symmetric(1.0), 2, 1.0, rng), StateOutOfRange);
}
