#include <gtest/gtest.h>

#include <cmath>

#include "tuma/denoiser.hpp"
#include "tuma/testing/oracles.hpp"

using namespace tuma;

TEST(Prior, OneSensorOneTargetTwoCells) {
  // The target lands in cell 1 with probability 1/2, and then the single
  // sensor necessarily reports it.
  const auto p = CountPrior::uniform_model(1, 1, 2);
  ASSERT_EQ(p.pmf().size(), 2u);
  EXPECT_NEAR(p.pmf()[0], 0.5, 1e-15);
  EXPECT_NEAR(p.pmf()[1], 0.5, 1e-15);
}

TEST(Prior, TwoSensorsTwoTargetsTwoCellsByHand) {
  const auto p = CountPrior::uniform_model(2, 2, 2);
  EXPECT_NEAR(p.pmf()[0], 3.0 / 8.0, 1e-15);
  EXPECT_NEAR(p.pmf()[1], 1.0 / 4.0, 1e-15);
  EXPECT_NEAR(p.pmf()[2], 3.0 / 8.0, 1e-15);
}

TEST(Prior, MeanIsKaOverM) {
  for (auto [ka, ma, m] : {std::tuple{50, 150, 1024}, {100, 10, 4096}, {7, 3, 16}}) {
    const auto p = CountPrior::uniform_model(ka, ma, m);
    EXPECT_NEAR(p.mean(), static_cast<double>(ka) / m, 1e-12);
  }
}

TEST(Prior, MassIsOneBeforeNormalization) {
  for (auto [ka, ma, m] : {std::tuple{1, 1, 2}, {50, 150, 1024}, {500, 500, 1 << 18}, {500, 1, 4}, {1, 500, 1 << 18}}) {
    EXPECT_NEAR(CountPrior::uniform_model(ka, ma, m).raw_mass(), 1.0, 1e-10)
        << ka << ' ' << ma << ' ' << m;
  }
}

TEST(Prior, ZeroProbabilityGrowsWithCodebook) {
  double last = 0.0;
  for (int bits = 2; bits <= 18; ++bits) {
    const double p0 = CountPrior::uniform_model(50, 150, 1 << bits).pmf()[0];
    EXPECT_GT(p0, last);
    last = p0;
  }
  EXPECT_GT(last, 0.999);
}

TEST(Prior, MatchesGenerativeSimulation) {
  Rng rng(77);
  const auto sim = tuma::testing::simulate_multiplicity_pmf(20, 40, 64, 200000, rng);
  const std::vector<double> pmf = CountPrior::uniform_model(20, 40, 64).pmf();
  double tv = 0.0;
  for (std::size_t k = 0; k < pmf.size(); ++k) tv += 0.5 * std::abs(pmf[k] - sim[k]);
  EXPECT_LT(tv, 0.005);
}

TEST(Prior, RejectsBadInput) {
  EXPECT_THROW(CountPrior(std::vector<double>{}), ConfigError);
  EXPECT_THROW(CountPrior({0.5, -0.1}), ConfigError);
  EXPECT_THROW(CountPrior({0.0, 0.0}), ConfigError);
  EXPECT_THROW(CountPrior::uniform_model(0, 1, 4), ConfigError);
}

TEST(Denoiser, DegeneratePriorGivesConstant) {
  const CountPrior delta0({1.0});
  const CountPrior delta2({0.0, 0.0, 1.0});
  for (double r : {-3.0, 0.0, 0.4, 5.0}) {
    EXPECT_EQ(posterior_mean(r, 0.3, delta0), 0.0);
    EXPECT_EQ(posterior_var(r, 0.3, delta0), 0.0);
    EXPECT_EQ(posterior_mean_deriv(r, 0.3, delta0), 0.0);
    EXPECT_NEAR(posterior_mean(r, 0.3, delta2), 2.0, 1e-15);
    EXPECT_EQ(posterior_var(r, 0.3, delta2), 0.0);
  }
}

TEST(Denoiser, FlatLikelihoodReturnsPriorMoments) {
  const auto p = CountPrior::uniform_model(10, 5, 8);
  EXPECT_NEAR(posterior_mean(3.0, 1e9, p), p.mean(), 1e-7);
  EXPECT_NEAR(posterior_var(3.0, 1e9, p), p.variance(), 1e-7);
}

TEST(Denoiser, HandPriorDirectSum) {
  const std::vector<double> pmf{0.3, 0.25, 0.2, 0.12, 0.08, 0.05};
  const CountPrior p(pmf);
  double z = 0.0, s1 = 0.0, s2 = 0.0;
  for (int k = 0; k <= 5; ++k) {
    const double w = pmf[k] * std::exp(-(3.2 - k) * (3.2 - k) / (2 * 0.5));
    z += w;
    s1 += w * k;
    s2 += w * k * k;
  }
  EXPECT_NEAR(posterior_mean(3.2, 0.5, p), s1 / z, 1e-14);
  EXPECT_NEAR(posterior_var(3.2, 0.5, p), s2 / z - (s1 / z) * (s1 / z), 1e-13);
}

TEST(Denoiser, TinyNoiseDoesNotUnderflow) {
  const auto p = CountPrior::uniform_model(50, 150, 1024);
  const auto m = posterior_moments(2.0, 1e-12, p);
  EXPECT_NEAR(m.mean, 2.0, 1e-12);
  EXPECT_GE(m.variance, 0.0);
  EXPECT_TRUE(std::isfinite(posterior_mean(37.3, 1e-9, p)));
  EXPECT_NEAR(posterior_mean(-5.0, 1e-6, p), 0.0, 1e-12);
}

TEST(Denoiser, AgreesWithHighPrecisionSum) {
  Rng rng(31);
  for (int t = 0; t < 300; ++t) {
    const int ka = 1 + static_cast<int>(rng.below(60));
    const auto p = CountPrior::uniform_model(ka, 1 + static_cast<int>(rng.below(100)),
                                             1 << (1 + static_cast<int>(rng.below(12))));
    const double r = -1.0 + rng.uniform() * (ka + 2.0);
    const double xi = std::pow(10.0, -2.0 + 3.0 * rng.uniform());
    const auto got = posterior_moments(r, xi, p);
    const auto want = tuma::testing::exact_moments(r, xi, p.pmf());
    const double wm = want.mean.convert_to<double>(), wv = want.variance.convert_to<double>();
    EXPECT_LE(std::abs(got.mean - wm), 1e-10 * std::abs(wm)) << r << ' ' << xi;
    EXPECT_LE(std::abs(got.variance - wv), 1e-10 * std::abs(wv)) << r << ' ' << xi;
  }
}

TEST(Denoiser, DerivativeMatchesFiniteDifference) {
  Rng rng(32);
  for (int t = 0; t < 100; ++t) {
    const int ka = 2 + static_cast<int>(rng.below(20));
    const auto p = CountPrior::uniform_model(ka, 1 + static_cast<int>(rng.below(20)), 4);
    const double r = rng.uniform() * ka;
    const double xi = 0.5 + 4.5 * rng.uniform();
    const double h = 1e-5;
    const double fd = (posterior_mean(r + h, xi, p) - posterior_mean(r - h, xi, p)) / (2 * h);
    const double d = posterior_mean_deriv(r, xi, p);
    // h = 1e-5 leaves a rounding floor near 1e-10 in the difference quotient
    EXPECT_LE(std::abs(d - fd), 1e-6 * std::abs(fd) + 1e-8) << r << ' ' << xi;
  }
}

TEST(Denoiser, MonotoneAndBounded) {
  const auto p = CountPrior::uniform_model(20, 30, 64);
  for (double xi : {0.01, 0.3, 4.0}) {
    double last = -1.0;
    for (double r = -3.0; r <= 24.0; r += 0.01) {
      const auto m = posterior_moments(r, xi, p);
      EXPECT_GE(m.mean, last - 1e-12);
      EXPECT_GE(m.mean, 0.0);
      EXPECT_LE(m.mean, 20.0);
      EXPECT_GE(m.variance, 0.0);
      last = m.mean;
    }
  }
}

TEST(Denoiser, RejectsBadNoise) {
  const auto p = CountPrior::uniform_model(2, 2, 4);
  EXPECT_THROW(posterior_moments(0.0, 0.0, p), DomainError);
  EXPECT_THROW(posterior_moments(0.0, -1.0, p), DomainError);
  EXPECT_THROW(posterior_moments(std::nan(""), 1.0, p), DomainError);
}
