#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include "oracles.hpp"
#include "song/core.hpp"
#include "song/stats.hpp"

namespace st = song::stats;

TEST(Stats, MeanVariance) {
  const std::vector<double> x{2, 4, 4, 4, 5, 5, 7, 9};
  EXPECT_DOUBLE_EQ(st::mean(x), 5.0);
  EXPECT_DOUBLE_EQ(st::variance(x, 0), 4.0);
  EXPECT_DOUBLE_EQ(st::variance(x), 32.0 / 7.0);
}

TEST(Stats, QuantileType7) {
  // R: quantile(c(1,2,3,4), c(.25,.5,.9)) = 1.75 2.5 3.7
  const std::vector<double> x{4, 1, 3, 2};
  EXPECT_DOUBLE_EQ(st::quantile(x, 0.25), 1.75);
  EXPECT_DOUBLE_EQ(st::quantile(x, 0.5), 2.5);
  EXPECT_NEAR(st::quantile(x, 0.9), 3.7, 1e-12);
  EXPECT_THROW(st::quantile({}, 0.5), song::Error);
}

TEST(Stats, NormalQuantileInvertsCdf) {
  for (double p : {1e-10, 1e-4, 0.025, 0.3, 0.5, 0.77, 0.975, 1 - 1e-8}) {
    EXPECT_NEAR(st::normal_cdf(st::normal_quantile(p)), p, 1e-12 + 1e-9 * p) << p;
  }
  EXPECT_NEAR(st::normal_quantile(0.975), 1.959963984540054, 1e-12);
}

TEST(Stats, KsDistanceMatchesBruteForce) {
  std::vector<double> x{0.1, 0.35, 0.4, 0.8, 0.95};
  const auto d = st::ks_distance(x, [](double v) { return v; });
  double brute = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    brute = std::max({brute, std::fabs((i + 1) / 5.0 - x[i]), std::fabs(x[i] - i / 5.0)});
  }
  EXPECT_DOUBLE_EQ(d, brute);
}

TEST(Stats, GaussHermiteIntegratesPolynomials) {
  const auto gh = st::gauss_hermite(24);
  double m0 = 0, m2 = 0, m4 = 0;
  for (std::size_t i = 0; i < gh.nodes.size(); ++i) {
    const double x = gh.nodes[i];
    m0 += gh.weights[i];
    m2 += gh.weights[i] * x * x;
    m4 += gh.weights[i] * x * x * x * x;
  }
  const double sp = std::sqrt(std::numbers::pi);
  EXPECT_NEAR(m0, sp, 1e-12);
  EXPECT_NEAR(m2, sp / 2, 1e-12);
  EXPECT_NEAR(m4, 3 * sp / 4, 1e-11);
}

TEST(Stats, NelderMeadFindsQuadraticMinimum) {
  const auto best = st::nelder_mead<2>(
      [](const std::array<double, 2>& p) { return (p[0] - 3) * (p[0] - 3) + 10 * (p[1] + 1) * (p[1] + 1); },
      {0.0, 0.0}, {1.0, 1.0}, 1e-14, 5000);
  EXPECT_NEAR(best[0], 3.0, 1e-5);
  EXPECT_NEAR(best[1], -1.0, 1e-5);
}

TEST(Stats, LeastSquaresExactLine) {
  const std::vector<double> x{0, 1, 2, 3}, y{1, 3, 5, 7};
  const auto f = st::least_squares(x, y);
  EXPECT_NEAR(f.slope, 2.0, 1e-12);
  EXPECT_NEAR(f.intercept, 1.0, 1e-12);
}

TEST(Core, RoundHalfEven) {
  EXPECT_EQ(song::round_half_even(0.5), 0.0);
  EXPECT_EQ(song::round_half_even(1.5), 2.0);
  EXPECT_EQ(song::round_half_even(2.5), 2.0);
  EXPECT_EQ(song::round_half_even(2.5000001), 3.0);
  EXPECT_EQ(song::round_half_even(-0.4), -0.0);
  EXPECT_EQ(song::round_half_even(7.2), 7.0);
}
