#pragma once

// In-process pub-sub backend and load harness.
//
// The backend stores each status update in its writer's log and delivers it
// to every follower's home timeline at write time, so a write costs
// 1 + followers(writer) operations. Operations are routed to shards by the
// hash of the user they touch; each shard admits operations through a FIFO
// queue at capacity / shards ops per second, and an admitted operation
// completes base_latency later. A write's response time is the queue wait
// of its store operation plus base latency; deliveries consume capacity and
// count toward throughput but are not timed individually.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <unordered_map>
#include <utility>
#include <vector>

#include "song/core.hpp"
#include "song/generate.hpp"
#include "song/kvfile.hpp"
#include "song/trace.hpp"

namespace song {

struct BackendConfig {
  double capacity_ops_per_sec = 1000.0;
  double base_latency_us = 1000.0;
  std::size_t shards = 1;
  std::size_t timeline_depth = 20;

  [[nodiscard]] double service_interval_us() const {
    return static_cast<double>(shards) * 1e6 / capacity_ops_per_sec;
  }

  void validate() const {
    if (!(capacity_ops_per_sec > 0.0)) throw Error("backend: capacity must be positive");
    if (!(base_latency_us >= 0.0)) throw Error("backend: base latency must be non-negative");
    if (shards == 0) throw Error("backend: need at least one shard");
    if (timeline_depth == 0) throw Error("backend: timeline depth must be positive");
  }
};

/// Reads capacity_ops_per_sec, base_latency_us and shards from the
/// [backend] section (or the top level) of a config document.
inline BackendConfig backend_from(const kv::Document& doc, BackendConfig cfg = {}) {
  for (const char* section : {"", "backend"}) {
    if (auto v = doc.get(section, "capacity_ops_per_sec")) cfg.capacity_ops_per_sec = kv::parse_double(*v, "capacity");
    if (auto v = doc.get(section, "base_latency_us")) cfg.base_latency_us = kv::parse_double(*v, "base_latency_us");
    if (auto v = doc.get(section, "shards")) cfg.shards = kv::parse_int<std::size_t>(*v, "shards");
  }
  cfg.validate();
  return cfg;
}

inline std::size_t shard_of(const UserId& user, std::size_t shards) { return fnv1a(user) % shards; }

/// Timeline storage of the pub-sub clone.
class CloneBackend {
 public:
  struct Update {
    std::uint64_t event_id = 0;
    std::int64_t timestamp_ms = 0;
    friend bool operator==(const Update&, const Update&) = default;
  };

  /// Copies the graph; trace users missing from it are added as isolated
  /// nodes through ensure_user().
  CloneBackend(SocialGraph graph, BackendConfig config) : graph_(std::move(graph)), config_(config) {
    config_.validate();
    resize();
  }

  std::uint32_t ensure_user(const UserId& u) {
    const auto idx = graph_.add_node(u);
    resize();
    return idx;
  }

  [[nodiscard]] const SocialGraph& graph() const { return graph_; }
  [[nodiscard]] const BackendConfig& config() const { return config_; }

  /// Append to the writer's own log.
  void store(std::uint32_t writer, Update u) {
    auto& log = own_[writer];
    log.push_back(u);
    if (log.size() > config_.timeline_depth) log.pop_front();
  }

  /// Deliver a followee's update to a follower's home timeline.
  void deliver(std::uint32_t follower, std::uint32_t followee, Update u) {
    auto& feed = inbox_[follower][followee];
    feed.push_back(u);
    if (feed.size() > config_.timeline_depth) feed.pop_front();
  }

  /// Home read: the most recent updates (newest first, at most
  /// timeline_depth) of each followee, ordered by followee id.
  [[nodiscard]] std::map<UserId, std::vector<Update>> home_timeline(const UserId& user) const {
    std::map<UserId, std::vector<Update>> out;
    const auto idx = graph_.index_of(user);
    if (!idx) return out;
    for (const auto& [followee, feed] : inbox_[*idx]) {
      out[graph_.name(followee)] = std::vector<Update>(feed.rbegin(), feed.rend());
    }
    return out;
  }

  [[nodiscard]] std::vector<Update> user_log(const UserId& user) const {
    const auto idx = graph_.index_of(user);
    if (!idx) return {};
    return {own_[*idx].rbegin(), own_[*idx].rend()};
  }

 private:
  void resize() {
    own_.resize(graph_.node_count());
    inbox_.resize(graph_.node_count());
  }

  SocialGraph graph_;
  BackendConfig config_;
  std::vector<std::deque<Update>> own_;
  std::vector<std::map<std::uint32_t, std::deque<Update>>> inbox_;
};

struct ReplayBin {
  std::int64_t start_ms = 0;
  std::uint64_t writes = 0;
  std::uint64_t offered = 0;    ///< operations arriving in the bin
  std::uint64_t completed = 0;  ///< of those, finished before the bin ends
  double mean_us = 0.0;
  double p50_us = 0.0;
  double p95_us = 0.0;
  double p99_us = 0.0;
};

struct ReplayReport {
  Horizon horizon;  ///< replay-clock window (trace horizon divided by time_scale)
  std::int64_t bin_ms = 5000;
  double time_scale = 1.0;
  BackendConfig backend;
  std::uint64_t writes = 0;
  std::uint64_t messages = 0;  ///< sum over writes of 1 + followers(writer)
  double mean_us = 0.0;
  double p50_us = 0.0;
  double p95_us = 0.0;
  double p99_us = 0.0;
  std::vector<ReplayBin> bins;
  std::optional<std::size_t> saturation_bin;
  /// Per-write (arrival_us, latency_us), ascending by arrival. In memory only.
  std::vector<std::pair<double, double>> write_latencies;

  [[nodiscard]] double mean_offered_per_sec() const {
    if (bins.empty()) return 0.0;
    return static_cast<double>(messages) / (static_cast<double>(horizon.duration_ms()) / 1000.0);
  }
};

enum class ClockMode { simulated, wall };

struct ReplayOptions {
  double time_scale = 1.0;  ///< > 1 accelerates; infinity replays as fast as possible
  std::int64_t report_bin_ms = 5000;
  ClockMode clock = ClockMode::simulated;
  unsigned workers = 1;
  /// Saturation: a full bin whose p95 exceeds this multiple of base latency.
  double saturation_factor = 10.0;
};

namespace detail {

struct Op {
  double arrival_us = 0.0;
  std::uint32_t target = 0;  ///< user whose storage the op touches
  std::uint32_t writer = 0;
  std::uint64_t event_id = 0;
  std::int64_t timestamp_ms = 0;
  bool is_store = false;
};

struct OpSample {
  double arrival_us = 0.0;
  double latency_us = 0.0;
  bool timed = false;  ///< store op: contributes to response-time statistics
};

/// Nearest-rank percentile of an ascending sample.
inline double percentile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return 0.0;
  const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(sorted.size())));
  return sorted[std::clamp<std::size_t>(rank, 1, sorted.size()) - 1];
}

inline void summarize(ReplayReport& rep, const std::vector<OpSample>& samples,
                      const std::vector<double>& write_arrivals_us, double saturation_factor) {
  const auto duration_ms = rep.horizon.duration_ms();
  const auto nbins = static_cast<std::size_t>(std::max<std::int64_t>(1, (duration_ms + rep.bin_ms - 1) / rep.bin_ms));
  const auto bin_us = static_cast<double>(rep.bin_ms) * 1000.0;
  std::vector<std::vector<double>> lat(nbins);
  rep.bins.assign(nbins, {});
  for (std::size_t b = 0; b < nbins; ++b) rep.bins[b].start_ms = rep.horizon.start_ms + static_cast<std::int64_t>(b) * rep.bin_ms;
  auto bin_of = [&](double arrival_us) {
    return std::min(nbins - 1, static_cast<std::size_t>(std::max(0.0, arrival_us) / bin_us));
  };
  for (const double a : write_arrivals_us) ++rep.bins[bin_of(a)].writes;
  std::vector<double> all;
  all.reserve(samples.size());
  double total = 0.0;
  for (const auto& s : samples) {
    const auto b = bin_of(s.arrival_us);
    auto& bin = rep.bins[b];
    ++bin.offered;
    if (s.arrival_us + s.latency_us < static_cast<double>(b + 1) * bin_us) ++bin.completed;
    if (!s.timed) continue;
    rep.write_latencies.emplace_back(s.arrival_us, s.latency_us);
    lat[b].push_back(s.latency_us);
    all.push_back(s.latency_us);
    total += s.latency_us;
  }
  for (std::size_t b = 0; b < nbins; ++b) {
    auto& v = lat[b];
    std::sort(v.begin(), v.end());
    auto& bin = rep.bins[b];
    if (!v.empty()) {
      double s = 0.0;
      for (const double x : v) s += x;
      bin.mean_us = s / static_cast<double>(v.size());
    }
    bin.p50_us = percentile(v, 0.50);
    bin.p95_us = percentile(v, 0.95);
    bin.p99_us = percentile(v, 0.99);
  }
  std::sort(rep.write_latencies.begin(), rep.write_latencies.end());
  std::sort(all.begin(), all.end());
  rep.mean_us = all.empty() ? 0.0 : total / static_cast<double>(all.size());
  rep.p50_us = percentile(all, 0.50);
  rep.p95_us = percentile(all, 0.95);
  rep.p99_us = percentile(all, 0.99);

  const double threshold = saturation_factor * rep.backend.base_latency_us;
  for (std::size_t b = 0; b < nbins; ++b) {
    const bool full = rep.bins[b].start_ms + rep.bin_ms <= rep.horizon.end_ms;
    if (full && rep.bins[b].writes > 0 && rep.bins[b].p95_us > threshold) {
      rep.saturation_bin = b;
      break;
    }
  }
}

}  // namespace detail

/// Replays every write of `trace` against `backend` and measures per-write
/// response times. Overload is queued, never dropped.
inline ReplayReport replay(const EventTrace& trace, CloneBackend& backend, const ReplayOptions& opt = {}) {
  if (!(opt.time_scale > 0.0)) throw Error("replay: time_scale must be positive");
  if (opt.report_bin_ms <= 0) throw Error("replay: report bin must be positive");
  const auto& cfg = backend.config();
  const std::int64_t start = trace.horizon().start_ms;
  auto to_replay_us = [&](std::int64_t ts) {
    return std::isinf(opt.time_scale) ? 0.0 : static_cast<double>(ts - start) * 1000.0 / opt.time_scale;
  };

  ReplayReport rep;
  rep.bin_ms = opt.report_bin_ms;
  rep.time_scale = opt.time_scale;
  rep.backend = cfg;
  const auto scaled_ms = std::isinf(opt.time_scale)
                             ? std::int64_t{1}
                             : std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(
                                                            static_cast<double>(trace.horizon().duration_ms()) /
                                                            opt.time_scale)));
  rep.horizon = Horizon{0, scaled_ms};

  std::vector<std::uint32_t> writer_idx;
  writer_idx.reserve(trace.size());
  for (const auto& e : trace.events()) writer_idx.push_back(backend.ensure_user(e.user));
  const auto& graph = backend.graph();

  // Operations per shard, in arrival order.
  std::vector<std::size_t> shard_of_user(graph.node_count());
  for (std::uint32_t u = 0; u < graph.node_count(); ++u) shard_of_user[u] = shard_of(graph.name(u), cfg.shards);
  std::vector<std::vector<detail::Op>> shard_ops(cfg.shards);
  std::vector<double> write_arrivals;
  write_arrivals.reserve(trace.size());
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const auto& e = trace.events()[i];
    const double arrival = to_replay_us(e.timestamp_ms);
    write_arrivals.push_back(arrival);
    const auto w = writer_idx[i];
    shard_ops[shard_of_user[w]].push_back({arrival, w, w, e.event_id, e.timestamp_ms, true});
    for (const auto f : graph.followers(w)) {
      shard_ops[shard_of_user[f]].push_back({arrival, f, w, e.event_id, e.timestamp_ms, false});
    }
    rep.messages += 1 + graph.followers(w).size();
  }
  rep.writes = trace.size();

  const double service = cfg.service_interval_us();
  std::vector<std::vector<detail::OpSample>> shard_samples(cfg.shards);

  auto execute = [&](const detail::Op& op) {
    const CloneBackend::Update u{op.event_id, op.timestamp_ms};
    if (op.is_store) {
      backend.store(op.target, u);
    } else {
      backend.deliver(op.target, op.writer, u);
    }
  };

  if (opt.clock == ClockMode::simulated) {
    auto run_shard = [&](std::size_t s) {
      double next_free = 0.0;
      auto& out = shard_samples[s];
      out.reserve(shard_ops[s].size());
      for (const auto& op : shard_ops[s]) {
        const double begin = std::max(op.arrival_us, next_free);
        next_free = begin + service;
        out.push_back({op.arrival_us, begin - op.arrival_us + cfg.base_latency_us, op.is_store});
        execute(op);
      }
    };
    const unsigned workers = std::max(1u, std::min<unsigned>(opt.workers, static_cast<unsigned>(cfg.shards)));
    if (workers == 1) {
      for (std::size_t s = 0; s < cfg.shards; ++s) run_shard(s);
    } else {
      std::vector<std::jthread> pool;
      for (unsigned k = 0; k < workers; ++k) {
        pool.emplace_back([&, k] {
          for (std::size_t s = k; s < cfg.shards; s += workers) run_shard(s);
        });
      }
    }
  } else {
    // Wall clock: workers dispatch writes when their scaled time comes; the
    // shard queue model is driven by measured arrival times.
    using clock = std::chrono::steady_clock;
    std::vector<std::mutex> locks(cfg.shards);
    std::vector<double> next_free(cfg.shards, 0.0);
    const auto t0 = clock::now();
    std::vector<std::vector<const detail::Op*>> by_write(trace.size());
    {
      std::unordered_map<std::uint64_t, std::size_t> pos;
      for (std::size_t i = 0; i < trace.size(); ++i) pos[trace.events()[i].event_id] = i;
      for (const auto& ops : shard_ops) {
        for (const auto& op : ops) by_write[pos[op.event_id]].push_back(&op);
      }
    }
    const unsigned workers = std::max(1u, opt.workers);
    std::vector<std::vector<detail::OpSample>> worker_samples(workers);
    auto dispatch = [&](unsigned k) {
      for (std::size_t i = k; i < trace.size(); i += workers) {
        const auto due = t0 + std::chrono::duration_cast<clock::duration>(
                                  std::chrono::duration<double, std::micro>(write_arrivals[i]));
        std::this_thread::sleep_until(due);
        for (const auto* op : by_write[i]) {
          const double now =
              std::chrono::duration<double, std::micro>(clock::now() - t0).count();
          const auto s = shard_of_user[op->target];
          std::lock_guard lock(locks[s]);
          const double begin = std::max(now, next_free[s]);
          next_free[s] = begin + service;
          worker_samples[k].push_back({now, begin - now + cfg.base_latency_us, op->is_store});
          execute(*op);
        }
      }
    };
    {
      std::vector<std::jthread> pool;
      for (unsigned k = 0; k < workers; ++k) pool.emplace_back(dispatch, k);
    }
    shard_samples = std::move(worker_samples);
  }

  std::vector<detail::OpSample> samples;
  for (auto& v : shard_samples) samples.insert(samples.end(), v.begin(), v.end());
  detail::summarize(rep, samples, write_arrivals, opt.saturation_factor);
  return rep;
}

inline ReplayReport replay(const EventTrace& trace, const SocialGraph& graph, const BackendConfig& config,
                           const ReplayOptions& opt = {}) {
  CloneBackend backend(graph, config);
  return replay(trace, backend, opt);
}

/// Brute-force fan-out total: sum over writes of 1 + followers(writer).
inline std::uint64_t fanout_messages(const EventTrace& trace, const SocialGraph& graph) {
  std::uint64_t total = 0;
  for (const auto& e : trace.events()) total += 1 + graph.follower_count(e.user);
  return total;
}

// ---------------------------------------------------------------------------
// Ramp stress test

struct RampStep {
  double duration_s = 300.0;
  double added_writes_per_sec = 0.0;
};

struct RampSchedule {
  std::vector<RampStep> steps;

  void validate() const {
    if (steps.empty()) throw Error("ramp schedule is empty");
    for (const auto& s : steps) {
      if (!(s.duration_s > 0.0)) throw Error("ramp step durations must be positive");
      if (!(s.added_writes_per_sec >= 0.0)) throw Error("ramp rates must be non-negative");
    }
  }

  [[nodiscard]] double total_s() const {
    double t = 0.0;
    for (const auto& s : steps) t += s.duration_s;
    return t;
  }
};

/// Parses "step_sec,add_rate,step_sec,add_rate,...".
inline RampSchedule parse_ramp(std::string_view text) {
  const auto f = kv::split(text, ',');
  if (f.size() < 2 || f.size() % 2 != 0) throw Error("ramp must be pairs 'step_sec,add_rate,...'");
  RampSchedule r;
  for (std::size_t i = 0; i < f.size(); i += 2) {
    r.steps.push_back({kv::parse_double(f[i], "ramp step"), kv::parse_double(f[i + 1], "ramp rate")});
  }
  r.validate();
  return r;
}

struct RampStepReport {
  std::int64_t start_ms = 0;
  std::int64_t end_ms = 0;
  double added_writes_per_sec = 0.0;
  double writes_per_sec = 0.0;  ///< measured, base plus added
  double ops_per_sec = 0.0;     ///< measured fan-out-inclusive rate
  double p95_us = 0.0;          ///< over all writes arriving in the step
  double max_p95_us = 0.0;      ///< largest full-bin p95
  bool saturated = false;
};

struct RampReport {
  ReplayReport replay;
  std::vector<RampStepReport> steps;
  std::optional<std::size_t> saturation_step;
  EventTrace trace;
};

struct RampOptions {
  std::uint64_t seed = kDefaultSeed;
  std::int64_t report_bin_ms = 5000;
  unsigned workers = 1;
  double saturation_factor = 10.0;
};

/// Generates the base trace plus one burst per schedule step (the step's
/// added writes per second, assigned with the model's activity
/// distribution) and replays it in simulated time.
inline RampReport ramp_stress(const ModelFile& model, const ScenarioSpec& base, const RampSchedule& schedule,
                              const SocialGraph& graph, const BackendConfig& backend, const RampOptions& opt = {}) {
  schedule.validate();
  const auto w = model.bin_width_ms();
  ScenarioSpec scenario = base;
  std::int64_t t = model.diurnal.origin_ms;
  const std::int64_t start = t;
  std::vector<std::pair<std::int64_t, std::int64_t>> windows;
  for (const auto& step : schedule.steps) {
    const auto len = static_cast<std::int64_t>(std::llround(step.duration_s * 1000.0));
    if (len % w != 0) throw Error("ramp step durations must be whole multiples of the model bin width");
    if (step.added_writes_per_sec > 0.0) {
      scenario.bursts.push_back({t, t + len, step.added_writes_per_sec * static_cast<double>(w) / 1000.0});
    }
    windows.emplace_back(t, t + len);
    t += len;
  }
  RampReport out;
  out.trace = generate(model, scenario, Horizon{start, t}, opt.seed, opt.workers).trace;
  ReplayOptions ro;
  ro.report_bin_ms = opt.report_bin_ms;
  ro.workers = opt.workers;
  ro.saturation_factor = opt.saturation_factor;
  out.replay = replay(out.trace, graph, backend, ro);

  const double threshold = opt.saturation_factor * backend.base_latency_us;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    RampStepReport s;
    s.start_ms = windows[i].first - start;
    s.end_ms = windows[i].second - start;
    s.added_writes_per_sec = schedule.steps[i].added_writes_per_sec;
    std::uint64_t writes = 0, ops = 0;
    for (const auto& b : out.replay.bins) {
      if (b.start_ms >= s.start_ms && b.start_ms < s.end_ms) {
        writes += b.writes;
        ops += b.offered;
        const bool full = b.start_ms + out.replay.bin_ms <= s.end_ms;
        if (full && b.writes > 0) {
          s.max_p95_us = std::max(s.max_p95_us, b.p95_us);
          if (b.p95_us > threshold) s.saturated = true;
        }
      }
    }
    std::vector<double> lat;
    for (const auto& [arrival, latency] : out.replay.write_latencies) {
      if (arrival >= static_cast<double>(s.start_ms) * 1000.0 && arrival < static_cast<double>(s.end_ms) * 1000.0) {
        lat.push_back(latency);
      }
    }
    std::sort(lat.begin(), lat.end());
    s.p95_us = detail::percentile(lat, 0.95);
    const double secs = static_cast<double>(s.end_ms - s.start_ms) / 1000.0;
    s.writes_per_sec = static_cast<double>(writes) / secs;
    s.ops_per_sec = static_cast<double>(ops) / secs;
    if (s.saturated && !out.saturation_step) out.saturation_step = i;
    out.steps.push_back(s);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Report files

inline std::string format_replay(const ReplayReport& r) {
  using kv::format_double;
  kv::Document doc("#song-replay v1");
  auto& s = doc.section("summary");
  s.set("horizon_start_ms", std::to_string(r.horizon.start_ms));
  s.set("horizon_end_ms", std::to_string(r.horizon.end_ms));
  s.set("bin_ms", std::to_string(r.bin_ms));
  s.set("time_scale", format_double(r.time_scale));
  s.set("writes", std::to_string(r.writes));
  s.set("messages", std::to_string(r.messages));
  s.set("mean_offered_per_sec", format_double(r.mean_offered_per_sec()));
  s.set("mean_us", format_double(r.mean_us));
  s.set("p50_us", format_double(r.p50_us));
  s.set("p95_us", format_double(r.p95_us));
  s.set("p99_us", format_double(r.p99_us));
  s.set("saturated", r.saturation_bin ? "true" : "false");
  if (r.saturation_bin) {
    const auto& b = r.bins[*r.saturation_bin];
    s.set("saturation_bin_start_ms", std::to_string(b.start_ms));
    s.set("saturation_offered_per_sec", format_double(static_cast<double>(b.offered) * 1000.0 / static_cast<double>(r.bin_ms)));
  }
  auto& be = doc.section("backend");
  be.set("capacity_ops_per_sec", format_double(r.backend.capacity_ops_per_sec));
  be.set("base_latency_us", format_double(r.backend.base_latency_us));
  be.set("shards", std::to_string(r.backend.shards));
  return doc.str();
}

inline std::string format_replay_series(const ReplayReport& r) {
  std::ostringstream os;
  os << "bin_start_ms,offered,completed,p50_us,p95_us,p99_us\n";
  for (const auto& b : r.bins) {
    os << b.start_ms << ',' << b.offered << ',' << b.completed << ',' << kv::format_double(b.p50_us) << ','
       << kv::format_double(b.p95_us) << ',' << kv::format_double(b.p99_us) << '\n';
  }
  return os.str();
}

inline std::string format_ramp(const RampReport& r) {
  kv::Document doc = kv::Document::parse(format_replay(r.replay));
  auto& s = doc.section("ramp");
  s.set("steps", std::to_string(r.steps.size()));
  s.set("saturation_step", r.saturation_step ? std::to_string(*r.saturation_step) : "none");
  for (const auto& st : r.steps) {
    s.set("step", std::to_string(st.start_ms) + "," + std::to_string(st.end_ms) + "," +
                      kv::format_double(st.added_writes_per_sec) + "," + kv::format_double(st.writes_per_sec) + "," +
                      kv::format_double(st.ops_per_sec) + "," + kv::format_double(st.p95_us) + "," +
                      kv::format_double(st.max_p95_us) + "," +
                      (st.saturated ? "saturated" : "ok"));
  }
  return doc.str();
}

/// The summary figures `compare` works on, as read back from a report.
struct ReplaySummary {
  Horizon horizon;
  std::uint64_t writes = 0;
  std::uint64_t messages = 0;
  double mean_offered_per_sec = 0.0;
  double p95_us = 0.0;
  double mean_us = 0.0;
};

inline ReplaySummary summary_of(const ReplayReport& r) {
  return {r.horizon, r.writes, r.messages, r.mean_offered_per_sec(), r.p95_us, r.mean_us};
}

inline ReplaySummary parse_replay_summary(std::string_view text) {
  const auto doc = kv::Document::parse(text);
  kv::expect_header(doc, "replay");
  ReplaySummary s;
  s.horizon.start_ms = kv::parse_int<std::int64_t>(doc.require("summary", "horizon_start_ms"), "horizon_start_ms");
  s.horizon.end_ms = kv::parse_int<std::int64_t>(doc.require("summary", "horizon_end_ms"), "horizon_end_ms");
  s.writes = kv::parse_int<std::uint64_t>(doc.require("summary", "writes"), "writes");
  s.messages = kv::parse_int<std::uint64_t>(doc.require("summary", "messages"), "messages");
  s.mean_offered_per_sec = kv::parse_double(doc.require("summary", "mean_offered_per_sec"), "mean_offered_per_sec");
  s.p95_us = kv::parse_double(doc.require("summary", "p95_us"), "p95_us");
  s.mean_us = kv::parse_double(doc.require("summary", "mean_us"), "mean_us");
  return s;
}

struct MetricDelta {
  double a = 0.0;
  double b = 0.0;
  double absolute = 0.0;  ///< b - a
  double relative = 0.0;  ///< (b - a) / a; 0 when both are 0
};

inline MetricDelta delta(double a, double b) {
  MetricDelta d{a, b, b - a, 0.0};
  if (a != 0.0) {
    d.relative = (b - a) / a;
  } else if (b != 0.0) {
    d.relative = std::numeric_limits<double>::infinity();
  }
  return d;
}

struct ComparisonSummary {
  MetricDelta mean_load;  ///< offered ops per second
  MetricDelta p95_latency;
  MetricDelta mean_latency;
  MetricDelta messages;
  MetricDelta writes;
};

inline ComparisonSummary compare(const ReplaySummary& a, const ReplaySummary& b) {
  if (a.horizon != b.horizon) throw Error("compare: reports cover different horizons");
  return {delta(a.mean_offered_per_sec, b.mean_offered_per_sec), delta(a.p95_us, b.p95_us),
          delta(a.mean_us, b.mean_us), delta(static_cast<double>(a.messages), static_cast<double>(b.messages)),
          delta(static_cast<double>(a.writes), static_cast<double>(b.writes))};
}

inline ComparisonSummary compare(const ReplayReport& a, const ReplayReport& b) {
  return compare(summary_of(a), summary_of(b));
}

inline std::string format_comparison(const ComparisonSummary& c) {
  kv::Document doc("#song-compare v1");
  auto put = [&](const char* name, const MetricDelta& d) {
    auto& s = doc.section(name);
    s.set("a", kv::format_double(d.a));
    s.set("b", kv::format_double(d.b));
    s.set("difference", kv::format_double(d.absolute));
    s.set("relative", kv::format_double(d.relative));
  };
  put("mean_load", c.mean_load);
  put("p95_latency", c.p95_latency);
  put("mean_latency", c.mean_latency);
  put("messages", c.messages);
  put("writes", c.writes);
  return doc.str();
}

}  // namespace song
