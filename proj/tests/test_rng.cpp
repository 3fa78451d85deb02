#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "tuma/rng.hpp"

using tuma::Rng;

TEST(SplitMix, ReferenceOutputFromZeroState) {
  std::uint64_t s = 0;
  EXPECT_EQ(tuma::splitmix64(s), 0xe220a8397b1dcdafULL);
  EXPECT_EQ(tuma::splitmix64(s), 0x6e789e6aa1b965f4ULL);
}

TEST(Rng, SameSeedSameSequence) {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a(), b());
}

TEST(Rng, StreamsDependOnlyOnSeedAndIndex) {
  Rng first = Rng::stream(7, 3);
  Rng other = Rng::stream(7, 4);
  (void)other();
  Rng again = Rng::stream(7, 3);
  for (int i = 0; i < 100; ++i) ASSERT_EQ(first(), again());
  Rng x = Rng::stream(7, 3), y = Rng::stream(7, 4), z = Rng::stream(8, 3);
  const auto vx = x();
  EXPECT_NE(vx, y());
  EXPECT_NE(vx, z());
}

TEST(Rng, UniformInUnitInterval) {
  Rng r(1);
  double sum = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / n, 0.5, 0.005);
}

TEST(Rng, BelowIsUniformChiSquare) {
  Rng r(5);
  const int bins = 7, n = 70000;
  std::vector<int> hist(bins, 0);
  for (int i = 0; i < n; ++i) {
    const auto v = r.below(bins);
    ASSERT_LT(v, static_cast<std::uint64_t>(bins));
    ++hist[v];
  }
  double chi2 = 0.0;
  const double expect = static_cast<double>(n) / bins;
  for (int h : hist) chi2 += (h - expect) * (h - expect) / expect;
  EXPECT_LT(chi2, 22.46);  // 0.999 quantile, 6 dof
}

TEST(Rng, BelowOneIsZero) {
  Rng r(9);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(r.below(1), 0u);
}

TEST(Rng, NormalMoments) {
  Rng r(11);
  const int n = 400000;
  double s1 = 0.0, s2 = 0.0, s4 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = r.normal();
    s1 += x;
    s2 += x * x;
    s4 += x * x * x * x;
  }
  EXPECT_NEAR(s1 / n, 0.0, 0.01);
  EXPECT_NEAR(s2 / n, 1.0, 0.01);
  EXPECT_NEAR(s4 / n, 3.0, 0.05);
}

TEST(Rng, ReseedRestartsSequence) {
  Rng r(3);
  const auto a = r();
  (void)r.normal();
  r.reseed(3);
  EXPECT_EQ(r(), a);
}
