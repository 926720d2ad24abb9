#include <gtest/gtest.h>

#include <set>
#include <vector>

#include "oracles.hpp"
#include "song/random.hpp"

using song::Rng;

TEST(Rng, SameSeedSameSequence) {
  Rng a(7), b(7);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a.next(), b.next());
}

TEST(Rng, DerivedStreamsDiffer) {
  std::set<std::uint64_t> seeds;
  for (std::uint64_t s = 0; s < 100; ++s) seeds.insert(song::derive_seed(42, s));
  EXPECT_EQ(seeds.size(), 100u);
  EXPECT_NE(song::derive_seed(1, song::streams::kNoise), song::derive_seed(2, song::streams::kNoise));
}

TEST(Rng, BelowStaysInRangeAndIsUniform) {
  Rng r(3);
  std::vector<int> hist(7, 0);
  for (int i = 0; i < 70000; ++i) {
    const auto v = r.below(7);
    ASSERT_LT(v, 7u);
    ++hist[v];
  }
  // Each cell ~ Binomial(70000, 1/7): sd ~ 92.6.
  for (int h : hist) EXPECT_NEAR(h, 10000, 5 * 92.6);
}

TEST(Rng, NormalMoments) {
  Rng r(11);
  std::vector<double> x(200000);
  for (auto& v : x) v = r.normal();
  EXPECT_NEAR(oracle::mean(x), 0.0, 5.0 / std::sqrt(200000.0));
  EXPECT_NEAR(oracle::variance(x), 1.0, 0.02);
}

TEST(Rng, PoissonMoments) {
  for (double lambda : {0.5, 4.0, 30.0, 500.0}) {
    Rng r(5);
    std::vector<double> x(100000);
    for (auto& v : x) v = static_cast<double>(r.poisson(lambda));
    const double se = std::sqrt(lambda / 100000.0);
    EXPECT_NEAR(oracle::mean(x), lambda, 5 * se) << lambda;
    EXPECT_NEAR(oracle::variance(x) / lambda, 1.0, 0.03) << lambda;
  }
}

TEST(Rng, UniformOpenNeverZero) {
  Rng r(0);
  for (int i = 0; i < 100000; ++i) {
    const double u = r.uniform_open();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}
