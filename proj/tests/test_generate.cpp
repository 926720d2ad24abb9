#include <gtest/gtest.h>

#include <cfenv>
#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "song/generate.hpp"

using namespace song;

namespace {

constexpr std::int64_t k5min = 300'000;

ModelFile constant_model(double m, double a, std::size_t length = 1) {
  ModelFile mf;
  mf.diurnal.bin_width_ms = k5min;
  mf.diurnal.length = length;
  mf.diurnal.mean_level = m;
  mf.noise.peakedness = a;
  mf.users = 1000;
  return mf;
}

ModelFile tone_model(double mean, double amp, double a) {
  ModelFile mf = constant_model(mean, a, 288);
  mf.diurnal.components = {{1, amp, 0.25}, {3, amp / 4, 1.0}};
  return mf;
}

Horizon bins(std::size_t n, std::int64_t start = 0) { return {start, start + static_cast<std::int64_t>(n) * k5min}; }

/// Banker's rounding through the FPU's default mode, independent of round_half_even.
double fpu_round(double x) {
  std::fesetround(FE_TONEAREST);
  return std::nearbyint(x);
}

}  // namespace

TEST(Counts, ZeroNoiseIdentity) {
  auto mf = tone_model(37.5, 30.0, 0.0);
  mf.diurnal.mean_level = 20.5;  // troughs go negative and clamp at 0
  const auto g = generate_counts(mf, {}, bins(600), 1);
  for (std::size_t t = 0; t < 600; ++t) {
    const double m = std::max(0.0, mf.diurnal.raw(static_cast<double>(t)));
    ASSERT_EQ(static_cast<double>(g.series.counts[t]), fpu_round(m)) << t;
  }
  EXPECT_EQ(g.clamped_bins, 0u);
}

TEST(Counts, HalfEvenRounding) {
  const auto g = generate_counts(constant_model(2.5, 0.0), {}, bins(3), 1);
  EXPECT_EQ(g.series.counts, (std::vector<std::uint64_t>{2, 2, 2}));
  const auto h = generate_counts(constant_model(3.5, 0.0), {}, bins(1), 1);
  EXPECT_EQ(h.series.counts[0], 4u);
}

TEST(Counts, VarianceIdentity) {
  const auto g = generate_counts(constant_model(1000.0, 3.4), {}, bins(10000), 7);
  const auto v = oracle::variance(g.series.values());
  EXPECT_GE(v / 1000.0, 3.06);
  EXPECT_LE(v / 1000.0, 3.74);
}

TEST(Counts, HorizonMustBeWholeBins) {
  EXPECT_THROW(generate_counts(constant_model(10, 1), {}, {0, k5min + 1}, 1), Error);
  EXPECT_THROW(generate_counts(constant_model(10, 1), {}, {0, 0}, 1), Error);
}

TEST(Counts, ClampedBinsCounted) {
  const auto g = generate_counts(constant_model(0.5, 50.0), {}, bins(1000), 3);
  EXPECT_GT(g.clamped_bins, 0u);
  for (auto c : g.series.counts) EXPECT_GE(c, 0u);
}

TEST(Scenario, BurstRaisesWindowMean) {
  auto mf = constant_model(1000.0, 3.4);
  ScenarioSpec s;
  s.bursts.push_back({100 * k5min, 110 * k5min, 500.0});
  const auto g = generate_counts(mf, s, bins(300), 11);
  const auto base = generate_counts(mf, {}, bins(300), 11);
  for (std::size_t t = 0; t < 300; ++t) {
    if (t < 100 || t >= 110) {
      ASSERT_EQ(g.series.counts[t], base.series.counts[t]);
    }
  }
  double in = 0.0, out = 0.0;
  for (std::size_t t = 0; t < 300; ++t) (t >= 100 && t < 110 ? in : out) += static_cast<double>(g.series.counts[t]);
  const double delta = in / 10.0 - out / 290.0;
  EXPECT_NEAR(delta, 500.0, 3.0 * std::sqrt(3.4 * 1000.0 / 10.0));
}

TEST(Scenario, BurstOutsideHorizonRejected) {
  ScenarioSpec s;
  s.bursts.push_back({0, 20 * k5min, 5.0});
  EXPECT_THROW(generate_counts(constant_model(10, 0), s, bins(10), 1), Error);
}

TEST(Scenario, ScaleAppliesToMeanOnly) {
  auto mf = tone_model(200.0, 80.0, 0.0);
  ScenarioSpec s;
  s.mean_scale = 1.5;
  s.bursts.push_back({5 * k5min, 9 * k5min, 41.0});
  const auto g = generate_counts(mf, s, bins(50), 1);
  for (std::size_t t = 0; t < 50; ++t) {
    const double burst = (t >= 5 && t < 9) ? 41.0 : 0.0;
    ASSERT_EQ(static_cast<double>(g.series.counts[t]), fpu_round(1.5 * mf.diurnal.evaluate(t) + burst)) << t;
  }
  // Listing order of scenario entries does not matter.
  ScenarioSpec r;
  r.bursts = s.bursts;
  r.mean_scale = 1.5;
  EXPECT_EQ(generate_counts(mf, r, bins(50), 1).series, g.series);
}

TEST(Scenario, ShiftCancelsTone) {
  auto mf = constant_model(1000.0, 3.4, 288);
  mf.diurnal.components = {{1, 600.0, 0.0}};
  ScenarioSpec s;
  s.populations = {{0.0, 0.5}, {144.0 * 300.0, 0.5}};
  const auto g = generate_counts(mf, s, bins(288 * 28), 5);
  const auto base = generate_counts(mf, {}, bins(288 * 28), 5);
  const auto x = g.series.values();
  const auto y = base.series.values();
  const double original = oracle::tone_amplitude(y, 28);
  EXPECT_NEAR(original, 600.0, 10.0);
  EXPECT_LT(oracle::tone_amplitude(x, 28), 0.01 * original);
}

TEST(Assign, SingleUserAndConservation) {
  auto mf = tone_model(50.0, 20.0, 3.4);
  mf.users = 1;
  const auto counts = generate_counts(mf, {}, bins(100), 2).series;
  const auto g = assign_users(counts, mf, 2);
  EXPECT_EQ(g.trace.size(), counts.total());
  for (const auto& e : g.trace.events()) ASSERT_EQ(e.user, "1");
  EXPECT_EQ(bin(g.trace, k5min), counts);
}

TEST(Assign, PerBinConservationManyUsers) {
  auto mf = tone_model(300.0, 100.0, 3.4);
  mf.users = 5000;
  const auto counts = generate_counts(mf, {}, bins(288), 4).series;
  const auto g = assign_users(counts, mf, 4);
  EXPECT_EQ(bin(g.trace, k5min), counts);
  std::uint64_t total = 0;
  for (const auto& [u, c] : per_user_counts(g.trace)) total += c;
  EXPECT_EQ(total, counts.total());
  for (std::size_t i = 0; i < g.trace.size(); ++i) ASSERT_EQ(g.trace.events()[i].event_id, i);
}

TEST(Assign, EmptyCountsGiveEmptyTrace) {
  BinnedSeries zero{k5min, 0, std::vector<std::uint64_t>(5, 0)};
  const auto g = assign_users(zero, constant_model(1, 0), 1);
  EXPECT_TRUE(g.trace.empty());
  EXPECT_EQ(g.trace.horizon(), bins(5));
}

TEST(Assign, InverseTransformLeftmost) {
  // Zero-weight users are never drawn.
  UserWeights w{{"a", 0.0}, {"b", 1.0}, {"c", 0.0}, {"d", 3.0}};
  BinnedSeries counts{k5min, 0, {40000}};
  const auto tr = assign_users(counts, w, 9);
  const auto c = per_user_counts(tr);
  EXPECT_FALSE(c.contains("a"));
  EXPECT_FALSE(c.contains("c"));
  // b ~ Binomial(40000, 1/4): sd ~ 86.6
  EXPECT_NEAR(static_cast<double>(c.at("b")), 10000.0, 5 * 86.6);
}

TEST(Assign, RecoversActivityDistribution) {
  // Total volume T = N E[w] so that expected per-user counts equal the weights.
  auto mf = constant_model(0.0, 0.0);
  mf.users = 100000;
  const double total = 1e5 * std::exp(2.05 + 0.9921 * 0.9921 / 2.0);
  mf.diurnal.mean_level = total / 2016.0;
  const auto g = generate(mf, {}, bins(2016), 42);
  std::vector<std::uint64_t> counts;
  for (const auto& [u, c] : per_user_counts(g.trace)) counts.push_back(c);
  FitOptions fo;
  fo.bootstrap = 200;
  const auto f = fit_activity(counts, fo);
  EXPECT_NEAR(f.mu, 2.05, 0.05 * 2.05);
  EXPECT_NEAR(f.sigma, 0.9921, 0.05 * 0.9921);
  EXPECT_TRUE(f.ks_pass) << f.ks_stat;
}

TEST(Baseline, UniformAssignment) {
  BinnedSeries counts{k5min, 0, std::vector<std::uint64_t>(100, 10000)};
  const auto g = random_baseline(counts, 10000, 3);
  EXPECT_EQ(bin(g.trace, k5min), counts);
  const auto pc = per_user_counts(g.trace);
  std::uint64_t mx = 0;
  std::vector<double> logs;
  for (const auto& [u, c] : pc) {
    mx = std::max(mx, c);
    logs.push_back(static_cast<double>(c));
  }
  // 10^6 balls in 10^4 bins: mean 100, sd ~ 10.
  EXPECT_LE(static_cast<double>(mx), 100.0 + 5.0 * std::sqrt(100.0 * (1 - 1e-4)));
  const auto f = fit_lognormal(logs, FitOptions{0, 0.05, 1});
  EXPECT_LT(f.sigma, 0.3);

  const auto one = random_baseline(BinnedSeries{k5min, 0, {3, 4}}, 1, 3);
  for (const auto& e : one.trace.events()) EXPECT_EQ(e.user, "1");
}

TEST(Generate, DeterministicAcrossWorkers) {
  auto mf = tone_model(400.0, 150.0, 3.4);
  mf.users = 2000;
  ScenarioSpec s;
  s.bursts.push_back({10 * k5min, 20 * k5min, 100.0});
  const auto a = generate(mf, s, bins(600), 77, 1);
  const auto b = generate(mf, s, bins(600), 77, 4);
  const auto c = generate(mf, s, bins(600), 77, 3);
  EXPECT_EQ(format_trace(a.trace), format_trace(b.trace));
  EXPECT_EQ(format_trace(a.trace), format_trace(c.trace));
  EXPECT_NE(format_trace(a.trace), format_trace(generate(mf, s, bins(600), 78, 1).trace));
  EXPECT_EQ(format_metadata(a.metadata, bins(600)), format_metadata(b.metadata, bins(600)));
}

TEST(Generate, FgnDeterministicAcrossWorkers) {
  auto mf = tone_model(400.0, 150.0, 3.4);
  mf.noise.family = NoiseFamily::fgn;
  mf.noise.hurst = 0.8;
  EXPECT_EQ(generate_counts(mf, {}, bins(1000), 5, 1).series, generate_counts(mf, {}, bins(1000), 5, 4).series);
}

TEST(Generate, Linearity) {
  auto mf = tone_model(400.0, 150.0, 3.4);
  mf.users = 3000;
  const auto one = generate(mf, {}, bins(2016), 5);
  auto doubled = mf;
  doubled.users = 6000;
  ScenarioSpec s;
  s.mean_scale = 2.0;
  const auto two = generate(doubled, s, bins(2016), 5);
  const double ratio = static_cast<double>(two.trace.size()) / static_cast<double>(one.trace.size());
  EXPECT_NEAR(ratio, 2.0, 0.1);
}

TEST(ModelFileIo, RoundTrip) {
  auto mf = tone_model(123.456, 78.9, 3.4);
  mf.noise.family = NoiseFamily::fgn;
  mf.noise.hurst = 0.77;
  mf.activity.mu = 1.234567890123;
  mf.users = 9999;
  mf.seed = 5;
  const auto text = format_model(mf);
  const auto back = parse_model(text);
  EXPECT_EQ(format_model(back), text);
  EXPECT_EQ(back.diurnal.components, mf.diurnal.components);
  EXPECT_EQ(back.noise.hurst, 0.77);
  EXPECT_EQ(back.users, 9999u);
  EXPECT_EQ(model_hash(back), model_hash(mf));
  EXPECT_THROW(parse_model("#song-model v2\n"), Error);
}

TEST(ScenarioIo, ParseAndFormat) {
  const auto s = parse_scenario("#song-scenario v1\n[scenario]\nmean_scale = 2\nburst = 0,600000,50\nshift = 3600,0.5\n");
  EXPECT_EQ(s.mean_scale, 2.0);
  ASSERT_EQ(s.bursts.size(), 1u);
  EXPECT_EQ(s.bursts[0].end_ms, 600000);
  ASSERT_EQ(s.populations.size(), 1u);
  EXPECT_EQ(parse_scenario(format_scenario(s)).bursts[0].rate_per_bin, 50.0);
  EXPECT_THROW(parse_scenario("#song-scenario v1\nmean_scale = 0\n"), Error);
  EXPECT_THROW(parse_scenario("#song-scenario v1\nburst = 5,5,1\n"), Error);
}

TEST(DefaultModel, Template) {
  const auto m = default_model();
  EXPECT_EQ(m.diurnal.length, 288u);
  ASSERT_EQ(m.diurnal.components.size(), 2u);
  EXPECT_EQ(m.diurnal.components[0].k, 1u);
  EXPECT_EQ(m.diurnal.components[1].k, 2u);
  EXPECT_EQ(m.noise.family, NoiseFamily::wgn);
  EXPECT_EQ(m.activity.mu, 2.05);
}

TEST(FitModel, RecoversPeakedness) {
  auto mf = tone_model(800.0, 300.0, 3.4);
  mf.users = 5000;
  const auto g = generate(mf, {}, bins(2016), 12);
  const auto r = fit_model(g.trace);
  EXPECT_NEAR(r.model.noise.peakedness, 3.4, 0.34);
  EXPECT_TRUE(r.normality.ad_pass);
}
