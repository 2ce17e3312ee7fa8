#include "regime_risk/ou_model.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <vector>

using namespace regime_risk;

namespace {

const OUParams kTable1{5.0, 48.22, 13.66, 62.24};

struct Moments {
  double mean = 0.0;
  double var = 0.0;
};

Moments moments(const std::vector<double>& xs) {
  Moments m;
  for (double x : xs) m.mean += x;
  m.mean /= static_cast<double>(xs.size());
  for (double x : xs) m.var += (x - m.mean) * (x - m.mean);
  m.var /= static_cast<double>(xs.size() - 1);
  return m;
}

std::vector<double> random_walk(std::size_t n, std::uint64_t seed) {
  auto rng = Stream(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> xs{100.0};
  for (std::size_t k = 1; k < n; ++k) xs.push_back(xs.back() + normal(rng));
  return xs;
}

}  // namespace

TEST(ConditionalLaw, DegenerateAtZeroElapsedTime) {
  const auto law = conditional_law(kTable1, 55.0, 0.3, 0.3);
  EXPECT_EQ(law.mean, 55.0);
  EXPECT_EQ(law.variance, 0.0);
}

TEST(ConditionalLaw, ZeroVolatilityIsDeterministicDecay) {
  const OUParams p{2.0, 10.0, 0.0, 0.0};
  const auto law = conditional_law(p, 20.0, 0.0, 0.5);
  EXPECT_EQ(law.variance, 0.0);
  EXPECT_NEAR(law.mean, 20.0 * std::exp(-1.0) + 10.0 * (1.0 - std::exp(-1.0)), 1e-13);
}

TEST(ConditionalLaw, CrudeOilParametersOneYear) {
  // 40-digit reference values.
  const auto law = conditional_law(kTable1, 62.24, 0.0, 1.0);
  EXPECT_NEAR(law.mean, 48.31446601692717824869, 1e-12);
  EXPECT_NEAR(law.variance, 18.65871285728660112817, 1e-12);
}

TEST(ConditionalLaw, UsesConditioningValueNotInitialSpot) {
  const auto a = conditional_law(kTable1, 40.0, 1.0, 1.5);
  const auto b = conditional_law(kTable1, 40.0, 0.0, 0.5);
  EXPECT_DOUBLE_EQ(a.mean, b.mean);
  EXPECT_LT(a.mean, kTable1.mu);
}

TEST(ConditionalLaw, VarianceIncreasesToStationaryCap) {
  double prev = 0.0;
  for (double tau = 0.001; tau < 20.0; tau *= 1.5) {
    const auto law = conditional_law(kTable1, 60.0, 0.0, tau);
    EXPECT_GE(law.variance, prev);
    EXPECT_LE(law.variance, kTable1.stationary_variance() + 1e-12);
    prev = law.variance;
  }
  EXPECT_NEAR(prev, kTable1.stationary_variance(), 1e-9);
}

TEST(ConditionalLaw, TowerPropertyOfMean) {
  for (double x : {-5.0, 30.0, 62.24}) {
    const double s = 0.1, t = 0.45, u = 1.3;
    const double via_t = conditional_law(kTable1, conditional_law(kTable1, x, s, t).mean, t, u).mean;
    EXPECT_NEAR(via_t, conditional_law(kTable1, x, s, u).mean, 1e-10);
  }
}

TEST(ConditionalLaw, RejectsBackwardTime) {
  EXPECT_THROW(conditional_law(kTable1, 1.0, 1.0, 0.5), TimeOrder);
}

TEST(ConditionalLaw, RejectsBadParameters) {
  EXPECT_THROW(conditional_law(OUParams{0.0, 1.0, 1.0, 0.0}, 1.0, 0.0, 1.0), InvalidParameter);
  EXPECT_THROW(conditional_law(OUParams{1.0, 1.0, -1.0, 0.0}, 1.0, 0.0, 1.0), InvalidParameter);
}

TEST(SampleExact, ZeroVolatilityReturnsMean) {
  const OUParams p{3.0, 50.0, 0.0, 70.0};
  auto rng = Stream(1);
  EXPECT_EQ(sample_exact(p, 70.0, 0.0, 0.2, rng), conditional_law(p, 70.0, 0.0, 0.2).mean);
}

TEST(SampleExact, MomentsMatchConditionalLaw) {
  const int n = 100000;
  std::vector<double> xs(n);
  for (int k = 0; k < n; ++k) {
    auto rng = Stream::derive(2024, static_cast<std::uint64_t>(k));
    xs[k] = sample_exact(kTable1, 62.24, 0.0, 0.2, rng);
  }
  const auto law = conditional_law(kTable1, 62.24, 0.0, 0.2);
  const auto m = moments(xs);
  EXPECT_NEAR(m.mean, law.mean, 4.0 * std::sqrt(law.variance / n));
  // Var of the sample variance of a Gaussian: 2 v^2 / (n - 1).
  EXPECT_NEAR(m.var, law.variance, 4.0 * law.variance * std::sqrt(2.0 / (n - 1)));
}

TEST(SampleExact, DeterministicGivenSeed) {
  auto a = Stream(8);
  auto b = Stream(8);
  EXPECT_EQ(sample_exact(kTable1, 1.0, 0.0, 1.0, a), sample_exact(kTable1, 1.0, 0.0, 1.0, b));
}

TEST(SimulatePath, SinglePointGrid) {
  auto rng = Stream(1);
  EXPECT_EQ(simulate_path(kTable1, {0.0}, rng), std::vector<double>{62.24});
}

TEST(SimulatePath, ZeroVolatilityRelaxesMonotonically) {
  const OUParams p{5.0, 48.22, 0.0, 62.24};
  auto rng = Stream(1);
  const auto xs = simulate_path(p, daily_grid(252), rng);
  for (std::size_t k = 1; k < xs.size(); ++k) {
    EXPECT_LT(xs[k], xs[k - 1]);
    EXPECT_GT(xs[k], p.mu);
    EXPECT_NEAR(xs[k], conditional_law(p, p.x0, 0.0, static_cast<double>(k) / 252.0).mean, 1e-9);
  }
}

TEST(SimulatePath, StationaryVarianceOfEndpoint) {
  const int n = 20000;
  std::vector<double> ends(n);
  const std::vector<double> grid{0.0, 1.0, 2.0, 3.0, 4.0};
  for (int k = 0; k < n; ++k) {
    auto rng = Stream::derive(99, static_cast<std::uint64_t>(k));
    ends[k] = simulate_path(kTable1, grid, rng).back();
  }
  const double v = kTable1.stationary_variance();
  EXPECT_NEAR(moments(ends).var, v, 4.0 * v * std::sqrt(2.0 / (n - 1)));
}

TEST(SimulatePath, GridErrors) {
  auto rng = Stream(1);
  EXPECT_THROW(simulate_path(kTable1, {}, rng), InvalidParameter);
  EXPECT_THROW(simulate_path(kTable1, {0.5, 1.0}, rng), InvalidParameter);
  EXPECT_THROW(simulate_path(kTable1, {0.0, 1.0, 0.5}, rng), TimeOrder);
}

TEST(PriceCsv, ParsesAndInfersSpacing) {
  std::istringstream in("date,price\n2020-01-06,60.5\n2020-01-07,61\n2020-01-08,59.75\n");
  const auto s = read_price_csv(in);
  ASSERT_EQ(s.size(), 3u);
  EXPECT_EQ(s.prices[2], 59.75);
  EXPECT_DOUBLE_EQ(s.dt, 1.0 / 252.0);
  EXPECT_DOUBLE_EQ(s.mean_calendar_spacing_days(), 1.0);
}

TEST(PriceCsv, UnsortedDatesNameTheRow) {
  std::istringstream in("date,price\n2020-01-06,60\n2020-01-08,61\n2020-01-07,62\n");
  try {
    read_price_csv(in);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("row 4"), std::string::npos) << e.what();
  }
}

TEST(PriceCsv, RejectsMalformedInput) {
  std::istringstream no_header("2020-01-06,60\n");
  EXPECT_THROW(read_price_csv(no_header), ParseError);
  std::istringstream bad_date("date,price\n2020-13-06,60\n");
  EXPECT_THROW(read_price_csv(bad_date), ParseError);
  std::istringstream bad_price("date,price\n2020-01-06,abc\n");
  EXPECT_THROW(read_price_csv(bad_price), ParseError);
  std::istringstream negative("date,price\n2020-01-06,-37.63\n");
  EXPECT_THROW(read_price_csv(negative), ParseError);
}

TEST(Calibrate, TooFewPoints) {
  EXPECT_THROW(calibrate({50.0, 51.0}, 1.0 / 252.0), TooFewPoints);
  std::istringstream in("date,price\n2020-01-06,60\n2020-01-07,61\n");
  EXPECT_THROW(calibrate(read_price_csv(in)), TooFewPoints);
}

TEST(Calibrate, ConstantSeriesIsFlagged) {
  EXPECT_THROW(calibrate(std::vector<double>(50, 42.0), 1.0 / 252.0), NotMeanReverting);
}

TEST(Calibrate, RandomWalkIsNotMeanReverting) {
  int rejected = 0;
  int plain_flagged = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto xs = random_walk(5000, seed);
    try {
      calibrate(xs, 1.0 / 252.0, {.reject_unit_root = true});
    } catch (const NotMeanReverting&) {
      ++rejected;
    }
    try {
      const auto fit = calibrate(xs, 1.0 / 252.0);
      if (fit.unit_root_stat > -2.86) ++plain_flagged;
    } catch (const NotMeanReverting&) {
      ++plain_flagged;
    }
  }
  // 5% test: about 95 of 100 random walks keep the unit root.
  EXPECT_GE(rejected, 88);
  EXPECT_EQ(plain_flagged, rejected);
}

TEST(Calibrate, TrendingSeriesHasSlopeAboveOne) {
  std::vector<double> xs;
  for (int k = 0; k < 100; ++k) xs.push_back(50.0 * std::pow(1.01, k));
  EXPECT_THROW(calibrate(xs, 1.0 / 252.0), NotMeanReverting);
}

TEST(Calibrate, StrictModeAcceptsStrongReversion) {
  auto rng = Stream(3);
  const auto fit = calibrate(simulate_path(kTable1, daily_grid(10000), rng), 1.0 / 252.0,
                             {.reject_unit_root = true});
  EXPECT_LT(fit.unit_root_stat, -2.86);
}

TEST(Calibrate, ExactExponentialDecayRecoversParameters) {
  const OUParams p{3.0, 20.0, 0.0, 35.0};
  auto rng = Stream(1);
  const auto xs = simulate_path(p, daily_grid(500), rng);
  const auto fit = calibrate(xs, 1.0 / 252.0);
  EXPECT_NEAR(fit.params.alpha, 3.0, 1e-6);
  EXPECT_NEAR(fit.params.mu, 20.0, 1e-6);
  EXPECT_NEAR(fit.params.sigma, 0.0, 1e-4);
  EXPECT_EQ(fit.params.x0, 35.0);
}

TEST(Calibrate, SimulateThenFitWithinReportedErrors) {
  auto rng = Stream(424242);
  const auto xs = simulate_path(kTable1, daily_grid(10000), rng);
  const auto fit = calibrate(xs, 1.0 / 252.0);
  EXPECT_LE(std::abs(fit.params.alpha - kTable1.alpha), 3.0 * fit.std_errors.alpha);
  EXPECT_LE(std::abs(fit.params.mu - kTable1.mu), 3.0 * fit.std_errors.mu);
  EXPECT_LE(std::abs(fit.params.sigma - kTable1.sigma), 3.0 * fit.std_errors.sigma);
  EXPECT_GT(fit.std_errors.alpha, 0.0);
}

TEST(Calibrate, ReportedErrorsMatchSpreadAcrossSeeds) {
  // The delta-method standard error should describe the actual scatter of
  // the estimates across independent samples (within 25%).
  const int seeds = 60;
  std::vector<double> alphas, sigmas;
  double se_alpha = 0.0, se_sigma = 0.0;
  for (int k = 0; k < seeds; ++k) {
    auto rng = Stream::derive(5150, static_cast<std::uint64_t>(k));
    const auto fit = calibrate(simulate_path(kTable1, daily_grid(4000), rng), 1.0 / 252.0);
    alphas.push_back(fit.params.alpha);
    sigmas.push_back(fit.params.sigma);
    se_alpha += fit.std_errors.alpha / seeds;
    se_sigma += fit.std_errors.sigma / seeds;
  }
  EXPECT_NEAR(std::sqrt(moments(alphas).var) / se_alpha, 1.0, 0.25);
  EXPECT_NEAR(std::sqrt(moments(sigmas).var) / se_sigma, 1.0, 0.25);
}
