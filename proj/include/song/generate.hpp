#pragma once

// Trace synthesis: X(t) = m_t + sqrt(a m_t) W_t + I_t, what-if scenario
// transformations, and assignment of writes to users.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "song/characterize.hpp"
#include "song/core.hpp"
#include "song/diurnal.hpp"
#include "song/kvfile.hpp"
#include "song/noise.hpp"
#include "song/random.hpp"
#include "song/trace.hpp"

namespace song {

/// Everything needed to synthesize a trace.
struct ModelFile {
  DiurnalModel diurnal;
  NoiseModel noise;
  LogNormalFit activity{2.05, 0.9921, 0, 0.0, false, false};  ///< per-user write-count distribution
  std::uint64_t users = 1;
  std::uint64_t seed = kDefaultSeed;

  [[nodiscard]] std::int64_t bin_width_ms() const { return diurnal.bin_width_ms; }

  void validate() const {
    diurnal.validate();
    noise.validate();
    if (!(activity.sigma >= 0.0) || !std::isfinite(activity.mu)) throw Error("model: invalid activity distribution");
    if (users < 1) throw Error("model: population must be >= 1");
  }
};

struct Burst {
  std::int64_t start_ms = 0;
  std::int64_t end_ms = 0;
  double rate_per_bin = 0.0;  ///< extra writes per bin for bins starting in [start, end)
};

struct ShiftedPopulation {
  double shift_s = 0.0;
  double weight = 1.0;
};

struct ScenarioSpec {
  double mean_scale = 1.0;
  std::vector<Burst> bursts;
  std::vector<ShiftedPopulation> populations;  ///< empty means one unshifted population

  void validate() const {
    if (!(mean_scale > 0.0)) throw Error("scenario: mean_scale must be positive");
    for (const auto& b : bursts) {
      if (b.end_ms <= b.start_ms) throw Error("scenario: burst window is empty");
      if (!std::isfinite(b.rate_per_bin)) throw Error("scenario: burst rate must be finite");
    }
    for (const auto& p : populations) {
      if (!(p.weight > 0.0)) throw Error("scenario: population weights must be positive");
    }
  }
};

struct GenerationMetadata {
  std::uint64_t model_hash = 0;
  std::uint64_t seed = 0;
  std::uint64_t users = 0;
  ScenarioSpec scenario;
  std::size_t clamped_bins = 0;
};

struct GeneratedTrace {
  EventTrace trace;
  GenerationMetadata metadata;
};

// ---------------------------------------------------------------------------
// Serialization

inline std::string format_model(const ModelFile& m) {
  using kv::format_double;
  kv::Document doc("#song-model v1");
  auto& d = doc.section("diurnal");
  d.set("bin_width_ms", std::to_string(m.diurnal.bin_width_ms));
  d.set("origin_ms", std::to_string(m.diurnal.origin_ms));
  d.set("length", std::to_string(m.diurnal.length));
  d.set("mean_level", format_double(m.diurnal.mean_level));
  d.set("energy_fraction", format_double(m.diurnal.energy_fraction));
  for (const auto& c : m.diurnal.components) {
    d.set("component", std::to_string(c.k) + "," + format_double(c.amplitude) + "," + format_double(c.phase));
  }
  auto& n = doc.section("noise");
  n.set("family", to_string(m.noise.family));
  n.set("peakedness", format_double(m.noise.peakedness));
  n.set("hurst", format_double(m.noise.hurst));
  n.set("seed", std::to_string(m.noise.seed));
  auto& a = doc.section("activity");
  a.set("distribution", "lognormal");
  a.set("mu", format_double(m.activity.mu));
  a.set("sigma", format_double(m.activity.sigma));
  auto& p = doc.section("population");
  p.set("users", std::to_string(m.users));
  auto& r = doc.section("run");
  r.set("seed", std::to_string(m.seed));
  return doc.str();
}

inline ModelFile parse_model(std::string_view text) {
  const auto doc = kv::Document::parse(text);
  kv::expect_header(doc, "model");
  ModelFile m;
  m.diurnal.bin_width_ms = kv::parse_int<std::int64_t>(doc.require("diurnal", "bin_width_ms"), "bin_width_ms");
  m.diurnal.origin_ms = kv::parse_int<std::int64_t>(doc.get("diurnal", "origin_ms").value_or("0"), "origin_ms");
  m.diurnal.length = kv::parse_int<std::size_t>(doc.require("diurnal", "length"), "length");
  m.diurnal.mean_level = kv::parse_double(doc.require("diurnal", "mean_level"), "mean_level");
  m.diurnal.energy_fraction =
      kv::parse_double(doc.get("diurnal", "energy_fraction").value_or("1"), "energy_fraction");
  for (const auto& line : doc.find("diurnal")->get_all("component")) {
    const auto f = kv::split(line, ',');
    if (f.size() != 3) throw Error("component must be 'k,amplitude,phase': " + line);
    m.diurnal.components.push_back({kv::parse_int<std::size_t>(f[0], "component k"),
                                    kv::parse_double(f[1], "component amplitude"),
                                    kv::parse_double(f[2], "component phase")});
  }
  m.noise.family = parse_noise_family(doc.require("noise", "family"));
  m.noise.peakedness = kv::parse_double(doc.require("noise", "peakedness"), "peakedness");
  m.noise.hurst = kv::parse_double(doc.get("noise", "hurst").value_or("0.5"), "hurst");
  m.noise.seed = kv::parse_int<std::uint64_t>(doc.get("noise", "seed").value_or("42"), "noise seed");
  if (const auto dist = doc.get("activity", "distribution"); dist && *dist != "lognormal") {
    throw Error("unsupported activity distribution '" + *dist + "'");
  }
  m.activity.mu = kv::parse_double(doc.require("activity", "mu"), "activity mu");
  m.activity.sigma = kv::parse_double(doc.require("activity", "sigma"), "activity sigma");
  m.users = kv::parse_int<std::uint64_t>(doc.require("population", "users"), "users");
  m.seed = kv::parse_int<std::uint64_t>(doc.get("run", "seed").value_or("42"), "seed");
  m.validate();
  return m;
}

inline ModelFile load_model(const std::string& path) {
  try {
    return parse_model(kv::read_file(path));
  } catch (const Error& e) {
    throw Error(path + ": " + e.what());
  }
}

inline void save_model(const ModelFile& m, const std::string& path) { kv::write_file(path, format_model(m)); }

inline std::uint64_t model_hash(const ModelFile& m) { return fnv1a(format_model(m)); }

inline Burst parse_burst(std::string_view text) {
  const auto f = kv::split(text, ',');
  if (f.size() != 3) throw Error("burst must be 'start_ms,end_ms,rate_per_bin': " + std::string(text));
  return {kv::parse_int<std::int64_t>(f[0], "burst start"), kv::parse_int<std::int64_t>(f[1], "burst end"),
          kv::parse_double(f[2], "burst rate")};
}

inline ShiftedPopulation parse_shift(std::string_view text) {
  const auto f = kv::split(text, ',');
  if (f.size() != 2) throw Error("shift must be 'offset_s,weight': " + std::string(text));
  return {kv::parse_double(f[0], "shift offset"), kv::parse_double(f[1], "shift weight")};
}

/// Scenario keys live in the [scenario] section (or before any section).
inline ScenarioSpec scenario_from(const kv::Document& doc) {
  ScenarioSpec s;
  for (const auto* section : {doc.find(""), doc.find("scenario")}) {
    if (!section) continue;
    for (const auto& [key, value] : section->entries) {
      if (key == "mean_scale") {
        s.mean_scale = kv::parse_double(value, "mean_scale");
      } else if (key == "burst") {
        s.bursts.push_back(parse_burst(value));
      } else if (key == "shift") {
        s.populations.push_back(parse_shift(value));
      }
    }
  }
  s.validate();
  return s;
}

inline ScenarioSpec parse_scenario(std::string_view text) {
  const auto doc = kv::Document::parse(text);
  kv::expect_header(doc, "scenario");
  return scenario_from(doc);
}

inline std::string format_scenario(const ScenarioSpec& s) {
  kv::Document doc("#song-scenario v1");
  auto& sec = doc.section("scenario");
  sec.set("mean_scale", kv::format_double(s.mean_scale));
  for (const auto& b : s.bursts) {
    sec.set("burst", std::to_string(b.start_ms) + "," + std::to_string(b.end_ms) + "," +
                         kv::format_double(b.rate_per_bin));
  }
  for (const auto& p : s.populations) {
    sec.set("shift", kv::format_double(p.shift_s) + "," + kv::format_double(p.weight));
  }
  return doc.str();
}

// ---------------------------------------------------------------------------
// Off-the-shelf template

/// Model used when no data are available: 24 h + 12 h waves around a mean
/// of 100 writes per 5-minute bin, WGN with a = 3.4, log-normal activity
/// (2.05, 0.9921) over 10,000 users.
inline ModelFile default_model(std::vector<std::string>* warnings = nullptr) {
  ModelFile m;
  m.diurnal = default_diurnal(100.0, 60.0, 300'000, warnings);
  m.noise = NoiseModel{NoiseFamily::wgn, 3.4, 0.5, kDefaultSeed};
  m.users = 10'000;
  return m;
}

// ---------------------------------------------------------------------------
// Counts

struct GeneratedCounts {
  BinnedSeries series;
  std::vector<double> mean;  ///< m_t after scaling and population mixing
  std::size_t clamped_bins = 0;
};

inline std::size_t horizon_bins(const Horizon& horizon, std::int64_t bin_width_ms) {
  if (horizon.duration_ms() <= 0) throw Error("horizon must be positive");
  if (horizon.duration_ms() % bin_width_ms != 0) {
    throw Error("horizon must be a whole number of " + std::to_string(bin_width_ms) + " ms bins");
  }
  return static_cast<std::size_t>(horizon.duration_ms() / bin_width_ms);
}

/// Mixed mean m_t = sum_p weight_p * mean_scale * m(t - shift_p).
inline std::vector<double> scenario_mean(const DiurnalModel& diurnal, const ScenarioSpec& scenario,
                                         const Horizon& horizon, std::size_t bins) {
  const auto w = static_cast<double>(diurnal.bin_width_ms);
  const double first = static_cast<double>(horizon.start_ms - diurnal.origin_ms) / w;
  std::vector<ShiftedPopulation> pops = scenario.populations;
  if (pops.empty()) pops.push_back({0.0, 1.0});
  std::vector<double> m(bins, 0.0);
  for (const auto& p : pops) {
    const double offset = first - p.shift_s * 1000.0 / w;
    for (std::size_t t = 0; t < bins; ++t) {
      m[t] += p.weight * scenario.mean_scale * diurnal.evaluate(offset + static_cast<double>(t));
    }
  }
  return m;
}

/// x_t = round(max(0, m_t + sqrt(a m_t) W_t + I_t)), rounding half to even.
inline GeneratedCounts generate_counts(const ModelFile& model, const ScenarioSpec& scenario, const Horizon& horizon,
                                       std::uint64_t seed, unsigned workers = 1) {
  model.validate();
  scenario.validate();
  const std::int64_t w = model.bin_width_ms();
  const std::size_t bins = horizon_bins(horizon, w);
  for (const auto& b : scenario.bursts) {
    if (b.start_ms < horizon.start_ms || b.end_ms > horizon.end_ms) {
      throw Error("burst window [" + std::to_string(b.start_ms) + ", " + std::to_string(b.end_ms) +
                  ") lies outside the horizon");
    }
  }

  GeneratedCounts out;
  out.mean = scenario_mean(model.diurnal, scenario, horizon, bins);
  std::vector<double> extra(bins, 0.0);
  for (const auto& b : scenario.bursts) {
    for (std::size_t t = 0; t < bins; ++t) {
      const std::int64_t start = horizon.start_ms + static_cast<std::int64_t>(t) * w;
      if (start >= b.start_ms && start < b.end_ms) extra[t] += b.rate_per_bin;
    }
  }
  const double a = model.noise.peakedness;
  const auto noise = a > 0.0 ? sample_noise(model.noise, bins, derive_seed(seed, streams::kNoise), workers)
                             : std::vector<double>(bins, 0.0);

  out.series = BinnedSeries{w, horizon.start_ms, std::vector<std::uint64_t>(bins, 0)};
  for (std::size_t t = 0; t < bins; ++t) {
    const double m = out.mean[t];
    const double x = m + std::sqrt(a * m) * noise[t] + extra[t];
    if (x < 0.0) ++out.clamped_bins;
    out.series.counts[t] = static_cast<std::uint64_t>(round_half_even(std::max(0.0, x)));
  }
  return out;
}

// ---------------------------------------------------------------------------
// User assignment

/// Explicit per-user weights (e.g. degree- or pagerank-derived), used in
/// place of log-normal draws.
using UserWeights = std::vector<std::pair<UserId, double>>;

inline UserWeights parse_weights(std::string_view text) {
  UserWeights w;
  detail::for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    if (line.empty() || line.front() == '#') return;
    const auto f = kv::split(line, ',');
    if (f.size() != 2 || f[0].empty()) throw Error("line " + std::to_string(line_no) + ": expected 'user_id,weight'");
    const double v = kv::parse_double(f[1], "weight");
    if (!(v >= 0.0)) throw Error("line " + std::to_string(line_no) + ": weight must be non-negative");
    w.emplace_back(std::string(f[0]), v);
  });
  if (w.empty()) throw Error("weights file lists no users");
  return w;
}

/// Per-user weights w_i ~ lognormal(mu, sigma), i = 1..N, users named "1".."N".
inline UserWeights draw_user_weights(const ModelFile& model, std::uint64_t seed) {
  Rng rng(derive_seed(seed, streams::kWeights));
  UserWeights w;
  w.reserve(model.users);
  for (std::uint64_t i = 0; i < model.users; ++i) {
    w.emplace_back(std::to_string(i + 1), rng.lognormal(model.activity.mu, model.activity.sigma));
  }
  return w;
}

namespace detail {

/// Fills each bin independently from a per-bin stream and concatenates.
template <typename PickUser>
EventTrace place_events(const BinnedSeries& counts, std::uint64_t seed, unsigned workers, PickUser&& pick) {
  const std::size_t bins = counts.size();
  const Horizon horizon{counts.origin_ms, counts.bin_start_ms(bins)};
  std::vector<std::vector<std::pair<std::int64_t, const UserId*>>> per_bin(bins);
  const std::uint64_t base = derive_seed(seed, streams::kAssign);
  auto fill = [&](std::size_t b) {
    Rng rng(derive_seed(base, b));
    auto& out = per_bin[b];
    out.reserve(counts.counts[b]);
    const std::int64_t start = counts.bin_start_ms(b);
    for (std::uint64_t i = 0; i < counts.counts[b]; ++i) {
      const UserId* user = &pick(rng);
      const auto offset = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(counts.bin_width_ms)));
      out.emplace_back(start + offset, user);
    }
    std::stable_sort(out.begin(), out.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
  };
  workers = std::max(1u, workers);
  if (workers == 1 || bins < 2) {
    for (std::size_t b = 0; b < bins; ++b) fill(b);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned k = 0; k < workers; ++k) {
      pool.emplace_back([&, k] {
        for (std::size_t b = k; b < bins; b += workers) fill(b);
      });
    }
  }
  std::vector<WriteEvent> events;
  events.reserve(counts.total());
  std::uint64_t id = 0;
  for (const auto& bin_events : per_bin) {
    for (const auto& [ts, user] : bin_events) events.push_back(WriteEvent{ts, *user, id++});
  }
  return EventTrace(std::move(events), horizon);
}

}  // namespace detail

/// Assigns every counted write to a user by inverse-transform sampling on
/// the cumulative weight table, and places it uniformly within its bin.
inline EventTrace assign_users(const BinnedSeries& counts, const UserWeights& weights, std::uint64_t seed,
                               unsigned workers = 1) {
  if (weights.empty()) throw Error("assign_users: no users");
  std::vector<double> cumulative(weights.size());
  double total = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) cumulative[i] = total += weights[i].second;
  if (!(total > 0.0)) throw Error("assign_users: weights sum to zero");
  return detail::place_events(counts, seed, workers, [&](Rng& rng) -> const UserId& {
    const double u = rng.uniform() * total;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    if (it == cumulative.end()) --it;
    return weights[static_cast<std::size_t>(it - cumulative.begin())].first;
  });
}

inline GeneratedTrace assign_users(const BinnedSeries& counts, const ModelFile& model, std::uint64_t seed,
                                   unsigned workers = 1) {
  if (model.users < 1) throw Error("assign_users: population must be >= 1");
  GeneratedTrace out{assign_users(counts, draw_user_weights(model, seed), seed, workers), {}};
  out.metadata.model_hash = model_hash(model);
  out.metadata.seed = seed;
  out.metadata.users = model.users;
  return out;
}

/// Same counts, each write given to a user drawn uniformly from 1..N.
inline GeneratedTrace random_baseline(const BinnedSeries& counts, std::uint64_t users, std::uint64_t seed,
                                      unsigned workers = 1) {
  if (users < 1) throw Error("random_baseline: population must be >= 1");
  std::vector<UserId> names;
  names.reserve(users);
  for (std::uint64_t i = 0; i < users; ++i) names.push_back(std::to_string(i + 1));
  GeneratedTrace out{
      detail::place_events(counts, seed, workers, [&](Rng& rng) -> const UserId& { return names[rng.below(users)]; }),
      {}};
  out.metadata.seed = seed;
  out.metadata.users = users;
  return out;
}

/// generate_counts followed by assign_users.
inline GeneratedTrace generate(const ModelFile& model, const ScenarioSpec& scenario, const Horizon& horizon,
                               std::uint64_t seed, unsigned workers = 1,
                               const std::optional<UserWeights>& weights = std::nullopt) {
  auto counts = generate_counts(model, scenario, horizon, seed, workers);
  GeneratedTrace out;
  if (weights) {
    out.trace = assign_users(counts.series, *weights, seed, workers);
    out.metadata.users = weights->size();
  } else {
    out = assign_users(counts.series, model, seed, workers);
  }
  out.metadata.model_hash = model_hash(model);
  out.metadata.seed = seed;
  out.metadata.scenario = scenario;
  out.metadata.clamped_bins = counts.clamped_bins;
  return out;
}

inline std::string format_metadata(const GenerationMetadata& meta, const Horizon& horizon) {
  kv::Document doc("#song-meta v1");
  auto& g = doc.section("generation");
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(meta.model_hash));
  g.set("model_hash", hash);
  g.set("seed", std::to_string(meta.seed));
  g.set("users", std::to_string(meta.users));
  g.set("horizon_start_ms", std::to_string(horizon.start_ms));
  g.set("horizon_end_ms", std::to_string(horizon.end_ms));
  g.set("clamped_bins", std::to_string(meta.clamped_bins));
  auto& s = doc.section("scenario");
  s.set("mean_scale", kv::format_double(meta.scenario.mean_scale));
  for (const auto& b : meta.scenario.bursts) {
    s.set("burst", std::to_string(b.start_ms) + "," + std::to_string(b.end_ms) + "," + kv::format_double(b.rate_per_bin));
  }
  for (const auto& p : meta.scenario.populations) {
    s.set("shift", kv::format_double(p.shift_s) + "," + kv::format_double(p.weight));
  }
  return doc.str();
}

// ---------------------------------------------------------------------------
// Fitting a model from data

struct ModelFitOptions {
  std::int64_t bin_width_ms = 300'000;
  DiurnalFitOptions diurnal{std::nullopt, 10};
  NoiseFamily family = NoiseFamily::wgn;
  /// Residual window [first, last) in bins for the peakedness estimate.
  std::size_t window_first = 0;
  std::size_t window_last = static_cast<std::size_t>(-1);
  std::uint64_t seed = kDefaultSeed;
};

struct ModelFitResult {
  ModelFile model;
  ResidualSeries residual;
  NormalityReport normality;
  ActivityFit activity;
  std::optional<SelfSimilarityReport> residual_variance_time;
};

/// Estimates every model parameter from an observed trace: Fourier mean,
/// peakedness from the normalized residual, Hurst parameter (FGN) from the
/// residual's variance-time slope, and the per-user activity distribution.
inline ModelFitResult fit_model(const EventTrace& trace, const ModelFitOptions& opt = {}) {
  if (trace.empty()) throw Error("fit: empty trace");
  const auto series = bin(trace, opt.bin_width_ms);
  ModelFitResult r;
  r.model.diurnal = fit_diurnal(series, opt.diurnal);
  r.residual = extract_residual(series, r.model.diurnal);
  r.model.noise.family = opt.family;
  r.model.noise.peakedness = estimate_peakedness(r.residual, opt.window_first, opt.window_last);
  r.model.noise.seed = opt.seed;
  r.normality = normality_report(r.residual);
  if (r.residual.values.size() >= 20) {
    try {
      r.residual_variance_time = variance_time(r.residual.values);
    } catch (const Error&) {
    }
  }
  if (opt.family == NoiseFamily::fgn) {
    if (!r.residual_variance_time) throw Error("fit: residual too short to estimate the Hurst parameter");
    r.model.noise.hurst = std::clamp(r.residual_variance_time->hurst, 0.501, 0.999);
  }
  std::vector<std::uint64_t> counts;
  for (const auto& [u, c] : per_user_counts(trace)) counts.push_back(c);
  FitOptions fo;
  fo.bootstrap = 0;
  fo.seed = opt.seed;
  r.activity = fit_activity(counts, fo);
  r.model.activity = LogNormalFit{r.activity.mu, r.activity.sigma, r.activity.n, r.activity.ks_stat, false, false};
  r.model.users = static_cast<std::uint64_t>(std::llround(r.activity.population()));
  r.model.seed = opt.seed;
  r.model.validate();
  return r;
}

}  // namespace song
