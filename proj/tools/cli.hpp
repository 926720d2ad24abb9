#pragma once

// Subcommand dispatch for the `song` tool. run_cli() takes the argument list
// without the program name and writes data to `out`, diagnostics to `err`.

#include <CLI11.hpp>

#include <cmath>
#include <iostream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "song/song.hpp"

namespace song::cli {

struct Shared {
  std::uint64_t seed = kDefaultSeed;
  double bin_width_s = 300.0;
  std::string out;
};

inline std::int64_t to_ms(double seconds, const char* what) {
  const double ms = std::round(seconds * 1000.0);
  if (!(ms > 0.0) || !std::isfinite(ms)) throw Error(std::string(what) + " must be positive");
  return static_cast<std::int64_t>(ms);
}

/// Writes to --out if given, otherwise to the data stream.
inline void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
  } else {
    kv::write_file(path, text);
  }
}

inline void warn_all(const std::vector<std::string>& warnings, std::ostream& err) {
  for (const auto& w : warnings) err << "warning: " << w << '\n';
}

inline std::string graph_section(const SocialGraph& g) {
  kv::Document doc;
  auto& s = doc.section("graph");
  s.set("nodes", std::to_string(g.node_count()));
  s.set("edges", std::to_string(g.edge_count()));
  if (g.node_count() > 0) {
    std::vector<double> f(g.node_count());
    for (std::uint32_t i = 0; i < g.node_count(); ++i) f[i] = static_cast<double>(g.followers(i).size());
    s.set("follower_median", kv::format_double(stats::quantile(f, 0.5)));
    s.set("follower_mean", kv::format_double(stats::mean(f)));
  }
  return doc.str();
}

inline ModelFile model_or_default(const std::string& path, std::ostream& err) {
  if (!path.empty()) return load_model(path);
  std::vector<std::string> warnings;
  auto m = default_model(&warnings);
  err << "warning: no --model given; using the built-in template (24 h + 12 h waves, mean 100 writes per 5 min, "
         "WGN a=3.4, log-normal activity (2.05, 0.9921), 10000 users)\n";
  warn_all(warnings, err);
  return m;
}

inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"song: social-network write workload characterization, generation and replay"};
  app.require_subcommand(1);
  Shared sh;
  auto add_shared = [&](CLI::App* sub) {
    sub->add_option("--seed", sh.seed, "Random seed (default 42)");
    sub->add_option("--bin-width", sh.bin_width_s, "Bin width in seconds (default 300)");
    sub->add_option("--out", sh.out, "Output path (default: standard output)");
  };

  // analyze
  auto* analyze = app.add_subcommand("analyze", "Characterize a write trace");
  std::string a_trace, a_graph;
  std::size_t a_lag = 10, a_topk = 100, a_boot = 200;
  analyze->add_option("trace", a_trace, "Trace file")->required();
  analyze->add_option("--graph", a_graph, "Follower graph; enables spam filtering");
  analyze->add_option("--max-lag", a_lag, "Largest autocorrelation lag");
  analyze->add_option("--top-k", a_topk, "Most active users tested for inter-write fits");
  analyze->add_option("--bootstrap", a_boot, "Bootstrap resamples per KS test (0 disables)");
  add_shared(analyze);

  // fit
  auto* fit = app.add_subcommand("fit", "Fit a generation model to a trace");
  std::string f_trace, f_family = "wgn", f_report;
  std::optional<double> f_energy;
  std::optional<std::size_t> f_components;
  std::vector<std::size_t> f_window;
  fit->add_option("trace", f_trace, "Trace file")->required();
  fit->add_option("--family", f_family, "Noise family: wgn or fgn")->check(CLI::IsMember({"wgn", "fgn"}));
  fit->add_option("--energy", f_energy, "Keep Fourier components until this share of variance");
  fit->add_option("--components", f_components, "Keep at most this many Fourier components (default 10)");
  fit->add_option("--window", f_window, "Residual window first,last (bins) for the peakedness estimate")
      ->delimiter(',')
      ->expected(2);
  fit->add_option("--report", f_report, "Write fit diagnostics (normality, QQ points) here");
  add_shared(fit);

  // generate
  auto* gen = app.add_subcommand("generate", "Synthesize a write trace");
  std::string g_model, g_scenario, g_weights;
  std::optional<double> g_horizon, g_scale;
  std::optional<std::int64_t> g_start;
  std::optional<std::uint64_t> g_users;
  std::vector<std::string> g_bursts, g_shifts;
  unsigned g_workers = 1;
  bool g_uniform = false;
  gen->add_option("--model", g_model, "Model file (default: built-in template)");
  gen->add_option("--scenario", g_scenario, "Scenario file");
  gen->add_option("--horizon", g_horizon, "Length in seconds (default: one model period)");
  gen->add_option("--start", g_start, "Horizon start in ms (default: model origin)");
  gen->add_option("--users", g_users, "Override the population size");
  gen->add_option("--scale", g_scale, "Multiply the mean level");
  gen->add_option("--burst", g_bursts, "start_s,end_s,rate: extra writes per bin, seconds from horizon start")
      ->take_all();
  gen->add_option("--shift", g_shifts, "offset_s,weight: add a time-shifted population")->take_all();
  gen->add_option("--weights", g_weights, "Per-user weights file (user_id,weight) instead of log-normal draws");
  gen->add_flag("--uniform-users", g_uniform, "Assign writes to users uniformly at random (baseline)");
  gen->add_option("--workers", g_workers, "Worker threads");
  add_shared(gen);

  // replay
  auto* rep = app.add_subcommand("replay", "Replay a trace against the simulated backend");
  std::string r_trace, r_graph, r_config, r_series, r_ramp, r_model, r_clock = "simulated";
  std::optional<double> r_capacity, r_latency;
  std::optional<std::size_t> r_shards;
  double r_time_scale = 1.0, r_report_bin_s = 5.0;
  unsigned r_workers = 1;
  rep->add_option("trace", r_trace, "Trace file (omit with --ramp)");
  rep->add_option("--graph", r_graph, "Follower graph")->required();
  rep->add_option("--config", r_config, "Config file with a [backend] section");
  rep->add_option("--backend-capacity", r_capacity, "Capacity in ops/s");
  rep->add_option("--base-latency", r_latency, "Base latency in microseconds");
  rep->add_option("--shards", r_shards, "Number of shards");
  rep->add_option("--time-scale", r_time_scale, "Replay speed-up (inf = as fast as possible)");
  rep->add_option("--report-bin", r_report_bin_s, "Report bin in seconds (default 5)");
  rep->add_option("--clock", r_clock, "simulated or wall")->check(CLI::IsMember({"simulated", "wall"}));
  rep->add_option("--ramp", r_ramp, "step_sec,add_rate,...: ramp stress test on a generated trace");
  rep->add_option("--model", r_model, "Model for --ramp (default: built-in template)");
  rep->add_option("--series", r_series, "Write the per-bin CSV here");
  rep->add_option("--workers", r_workers, "Worker threads");
  add_shared(rep);

  // compare
  auto* cmp = app.add_subcommand("compare", "Compare two replay reports");
  std::string c_a, c_b;
  cmp->add_option("report_a", c_a, "First replay report")->required();
  cmp->add_option("report_b", c_b, "Second replay report")->required();
  add_shared(cmp);

  std::vector<std::string> argv(args.rbegin(), args.rend());
  try {
    app.parse(argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    err << "run with --help for usage\n";
    return 2;
  }

  try {
    const std::int64_t bin_ms = to_ms(sh.bin_width_s, "--bin-width");

    if (*analyze) {
      auto trace = load_trace(a_trace);
      std::string extra;
      if (!a_graph.empty()) {
        const auto graph = load_graph(a_graph);
        auto filtered = filter_spammers(trace, graph);
        err << "info: spam filter removed " << filtered.removed.size() << " users\n";
        trace = std::move(filtered.trace);
        extra = graph_section(graph);
      }
      CharacterizeOptions opt;
      opt.bin_width_ms = bin_ms;
      opt.max_lag = a_lag;
      opt.top_k = a_topk;
      opt.fit.bootstrap = a_boot;
      opt.fit.seed = sh.seed;
      const auto c = characterize(trace, opt);
      warn_all(c.notes, err);
      emit(sh.out, format_report(c) + extra, out);
      return 0;
    }

    if (*fit) {
      const auto trace = load_trace(f_trace);
      ModelFitOptions opt;
      opt.bin_width_ms = bin_ms;
      opt.family = parse_noise_family(f_family);
      opt.seed = sh.seed;
      if (f_energy || f_components) opt.diurnal = DiurnalFitOptions{f_energy, f_components};
      if (!f_window.empty()) {
        opt.window_first = f_window[0];
        opt.window_last = f_window[1];
      }
      const auto r = fit_model(trace, opt);
      if (!r.normality.ad_pass) {
        err << "warning: residual fails the Anderson-Darling normality test (A*2 = "
            << kv::format_double(r.normality.ad_stat) << ")\n";
      }
      if (!f_report.empty()) {
        kv::Document doc("#song-fit v1");
        auto& s = doc.section("residual");
        s.set("points", std::to_string(r.residual.values.size()));
        s.set("skipped_bins", std::to_string(r.residual.skipped));
        s.set("peakedness", kv::format_double(r.model.noise.peakedness));
        s.set("ad_stat", kv::format_double(r.normality.ad_stat));
        s.set("ad_pass", r.normality.ad_pass ? "true" : "false");
        if (r.residual_variance_time) {
          s.set("variance_time_slope", kv::format_double(r.residual_variance_time->slope));
          s.set("hurst", kv::format_double(r.residual_variance_time->hurst));
        }
        auto& a = doc.section("activity");
        a.set("mu", kv::format_double(r.activity.mu));
        a.set("sigma", kv::format_double(r.activity.sigma));
        a.set("observed_users", std::to_string(r.activity.n));
        a.set("zero_prob", kv::format_double(r.activity.zero_prob));
        auto& q = doc.section("qq");
        for (const auto& [th, em] : r.normality.qq) q.set("point", kv::format_double(th) + "," + kv::format_double(em));
        kv::write_file(f_report, doc.str());
      }
      emit(sh.out, format_model(r.model), out);
      return 0;
    }

    if (*gen) {
      if (sh.out.empty()) throw Error("generate: --out is required");
      auto model = model_or_default(g_model, err);
      if (g_users) model.users = *g_users;
      ScenarioSpec scenario;
      if (!g_scenario.empty()) scenario = parse_scenario(kv::read_file(g_scenario));
      if (g_scale) scenario.mean_scale *= *g_scale;
      const std::int64_t start = g_start.value_or(model.diurnal.origin_ms);
      const std::int64_t length =
          g_horizon ? to_ms(*g_horizon, "--horizon")
                    : static_cast<std::int64_t>(model.diurnal.length) * model.bin_width_ms();
      const Horizon horizon{start, start + length};
      for (const auto& b : g_bursts) {
        const auto f = kv::split(b, ',');
        if (f.size() != 3) throw Error("--burst must be start_s,end_s,rate: " + b);
        const auto offset = [&](std::string_view v, const char* what) {
          return start + static_cast<std::int64_t>(std::llround(kv::parse_double(v, what) * 1000.0));
        };
        scenario.bursts.push_back({offset(f[0], "burst start"), offset(f[1], "burst end"),
                                   kv::parse_double(f[2], "burst rate")});
      }
      for (const auto& s : g_shifts) scenario.populations.push_back(parse_shift(s));
      scenario.validate();

      GeneratedTrace g;
      if (g_uniform) {
        if (!g_weights.empty()) throw Error("generate: --uniform-users and --weights are exclusive");
        const auto counts = generate_counts(model, scenario, horizon, sh.seed, g_workers);
        g = random_baseline(counts.series, model.users, sh.seed, g_workers);
        g.metadata.model_hash = model_hash(model);
        g.metadata.scenario = scenario;
        g.metadata.clamped_bins = counts.clamped_bins;
      } else {
        std::optional<UserWeights> weights;
        if (!g_weights.empty()) weights = parse_weights(kv::read_file(g_weights));
        g = generate(model, scenario, horizon, sh.seed, g_workers, weights);
      }
      if (g.metadata.clamped_bins > 0) {
        err << "warning: " << g.metadata.clamped_bins << " bins had a negative draw and were clamped to 0\n";
      }
      save_trace(g.trace, sh.out);
      kv::write_file(sh.out + ".meta", format_metadata(g.metadata, horizon));
      return 0;
    }

    if (*rep) {
      auto graph = load_graph(r_graph);
      BackendConfig cfg;
      if (!r_config.empty()) cfg = backend_from(kv::Document::parse(kv::read_file(r_config)), cfg);
      if (r_capacity) cfg.capacity_ops_per_sec = *r_capacity;
      if (r_latency) cfg.base_latency_us = *r_latency;
      if (r_shards) cfg.shards = *r_shards;
      cfg.validate();
      const auto report_bin_ms = to_ms(r_report_bin_s, "--report-bin");

      if (!r_ramp.empty()) {
        if (!r_trace.empty()) throw Error("replay: give either a trace or --ramp, not both");
        if (r_clock != "simulated") throw Error("replay: --ramp runs in simulated time only");
        const auto model = model_or_default(r_model, err);
        RampOptions ro;
        ro.seed = sh.seed;
        ro.report_bin_ms = report_bin_ms;
        ro.workers = r_workers;
        const auto ramp = ramp_stress(model, ScenarioSpec{}, parse_ramp(r_ramp), graph, cfg, ro);
        if (!r_series.empty()) kv::write_file(r_series, format_replay_series(ramp.replay));
        emit(sh.out, format_ramp(ramp), out);
        return 0;
      }
      if (r_trace.empty()) throw Error("replay: a trace file is required");
      const auto trace = load_trace(r_trace);
      ReplayOptions ro;
      ro.time_scale = r_time_scale;
      ro.report_bin_ms = report_bin_ms;
      ro.workers = r_workers;
      ro.clock = r_clock == "wall" ? ClockMode::wall : ClockMode::simulated;
      CloneBackend backend(std::move(graph), cfg);
      const auto report = replay(trace, backend, ro);
      if (!r_series.empty()) kv::write_file(r_series, format_replay_series(report));
      emit(sh.out, format_replay(report), out);
      return 0;
    }

    if (*cmp) {
      const auto a = parse_replay_summary(kv::read_file(c_a));
      const auto b = parse_replay_summary(kv::read_file(c_b));
      emit(sh.out, format_comparison(compare(a, b)), out);
      return 0;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace song::cli
