#pragma once

// Statistical characterization of write traces: per-user activity fits,
// inter-write diagnostics, independence and self-similarity tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "song/core.hpp"
#include "song/kvfile.hpp"
#include "song/random.hpp"
#include "song/stats.hpp"
#include "song/trace.hpp"

namespace song {

/// Goodness-of-fit settings. KS with estimated parameters is calibrated by
/// a parametric bootstrap: the fit passes when its KS distance lies below
/// the (1 - level) quantile of distances from refits of resampled data.
/// bootstrap = 0 skips the test.
struct FitOptions {
  std::size_t bootstrap = 200;
  double level = 0.05;
  std::uint64_t seed = kDefaultSeed;
};

struct LogNormalFit {
  double mu = 0.0;
  double sigma = 0.0;
  std::size_t n = 0;
  double ks_stat = 0.0;
  bool ks_pass = false;
  bool ks_evaluated = false;
};

struct ExponentialFit {
  double rate = 0.0;
  std::size_t n = 0;
  double ks_stat = 0.0;
  bool ks_pass = false;
  bool ks_evaluated = false;
};

struct PowerLawFit {
  double alpha = 0.0;
  double xmin = 0.0;
  std::size_t n_tail = 0;
  double ks_stat = 0.0;
  bool discrete = false;
};

namespace detail {

/// Pass decision shared by the bootstrap tests.
template <typename Resample>
bool bootstrap_pass(double observed, const FitOptions& opt, Resample&& resample_distance) {
  std::vector<double> distances;
  distances.reserve(opt.bootstrap);
  Rng rng(derive_seed(opt.seed, streams::kBootstrap));
  for (std::size_t b = 0; b < opt.bootstrap; ++b) distances.push_back(resample_distance(rng));
  return observed < stats::quantile(std::move(distances), 1.0 - opt.level);
}

inline std::pair<double, double> log_moments(std::span<const double> samples) {
  double s = 0.0;
  for (const double x : samples) s += std::log(x);
  const double mu = s / static_cast<double>(samples.size());
  double ss = 0.0;
  for (const double x : samples) ss += (std::log(x) - mu) * (std::log(x) - mu);
  return {mu, std::sqrt(ss / static_cast<double>(samples.size()))};
}

inline double lognormal_ks(std::vector<double> sorted, double mu, double sigma) {
  std::sort(sorted.begin(), sorted.end());
  return stats::ks_distance(sorted, [&](double x) { return stats::normal_cdf((std::log(x) - mu) / sigma); });
}

inline double exponential_ks(std::vector<double> sorted, double rate) {
  std::sort(sorted.begin(), sorted.end());
  return stats::ks_distance(sorted, [&](double x) { return -std::expm1(-rate * x); });
}

}  // namespace detail

/// Maximum-likelihood log-normal fit: mu = mean(ln x), sigma = sd(ln x)
/// with divisor n.
inline LogNormalFit fit_lognormal(std::span<const double> samples, const FitOptions& opt = {}) {
  if (samples.size() < 10) throw Error("fit_lognormal: need at least 10 samples");
  for (const double x : samples) {
    if (!(x > 0.0)) throw Error("fit_lognormal: samples must be positive");
  }
  const auto [mu, sigma] = detail::log_moments(samples);
  if (!(sigma > 0.0)) throw Error("fit_lognormal: degenerate sample (zero log-variance)");
  LogNormalFit fit{mu, sigma, samples.size(), 0.0, false, false};
  fit.ks_stat = detail::lognormal_ks({samples.begin(), samples.end()}, mu, sigma);
  if (opt.bootstrap > 0) {
    const std::size_t n = samples.size();
    fit.ks_pass = detail::bootstrap_pass(fit.ks_stat, opt, [&](Rng& rng) {
      std::vector<double> sim(n);
      for (auto& v : sim) v = rng.lognormal(mu, sigma);
      const auto [m, s] = detail::log_moments(sim);
      return detail::lognormal_ks(std::move(sim), m, s);
    });
    fit.ks_evaluated = true;
  }
  return fit;
}

/// Maximum-likelihood exponential fit: rate = 1 / mean.
inline ExponentialFit fit_exponential(std::span<const double> samples, const FitOptions& opt = {}) {
  if (samples.size() < 10) throw Error("fit_exponential: need at least 10 samples");
  for (const double x : samples) {
    if (!(x > 0.0)) throw Error("fit_exponential: samples must be positive");
  }
  const double rate = 1.0 / stats::mean(samples);
  ExponentialFit fit{rate, samples.size(), detail::exponential_ks({samples.begin(), samples.end()}, rate), false,
                     false};
  if (opt.bootstrap > 0) {
    const std::size_t n = samples.size();
    fit.ks_pass = detail::bootstrap_pass(fit.ks_stat, opt, [&](Rng& rng) {
      std::vector<double> sim(n);
      for (auto& v : sim) v = rng.exponential(rate);
      const double r = 1.0 / stats::mean(sim);
      return detail::exponential_ks(std::move(sim), r);
    });
    fit.ks_evaluated = true;
  }
  return fit;
}

// ---------------------------------------------------------------------------
// Power law (Clauset, Shalizi & Newman): xmin minimizes the KS distance of
// the tail; alpha is the tail MLE for each candidate xmin.

enum class Support { automatic, continuous, discrete };

struct PowerLawOptions {
  Support support = Support::automatic;
  std::size_t max_candidates = 500;
  std::size_t min_tail = 10;
};

inline PowerLawFit fit_powerlaw(std::span<const double> samples, const PowerLawOptions& opt = {}) {
  if (samples.size() < 50) throw Error("fit_powerlaw: need at least 50 samples");
  std::vector<double> x(samples.begin(), samples.end());
  for (const double v : x) {
    if (!(v > 0.0)) throw Error("fit_powerlaw: samples must be positive");
  }
  std::sort(x.begin(), x.end());
  if (x.front() == x.back()) throw Error("fit_powerlaw: all samples are equal");
  const std::size_t n = x.size();

  bool discrete = opt.support == Support::discrete;
  if (opt.support == Support::automatic) {
    discrete = std::all_of(x.begin(), x.end(), [](double v) { return v == std::floor(v); });
  }
  // Discrete data use the continuous approximation with xmin - 1/2.
  const double offset = discrete ? 0.5 : 0.0;

  // suffix_log[i] = sum_{j >= i} ln x_j
  std::vector<double> suffix_log(n + 1, 0.0);
  for (std::size_t i = n; i-- > 0;) suffix_log[i] = suffix_log[i + 1] + std::log(x[i]);

  // Candidate start indices: first occurrence of each distinct value with
  // a tail of at least min_tail samples, thinned by sample quantile.
  std::vector<std::size_t> starts;
  for (std::size_t i = 0; i + opt.min_tail <= n; ++i) {
    if (i == 0 || x[i] != x[i - 1]) starts.push_back(i);
  }
  if (starts.empty()) throw Error("fit_powerlaw: fewer than " + std::to_string(opt.min_tail) + " tail samples");
  if (starts.size() > opt.max_candidates) {
    const std::size_t last_valid = n - opt.min_tail;
    std::vector<std::size_t> thinned;
    for (std::size_t j = 0; j < opt.max_candidates; ++j) {
      const auto idx = static_cast<std::size_t>(std::llround(static_cast<double>(j) * static_cast<double>(last_valid) /
                                                             static_cast<double>(opt.max_candidates - 1)));
      // Snap to the first occurrence of that value.
      const auto first = static_cast<std::size_t>(std::lower_bound(x.begin(), x.end(), x[idx]) - x.begin());
      if (thinned.empty() || thinned.back() != first) thinned.push_back(first);
    }
    starts = std::move(thinned);
  }

  std::optional<PowerLawFit> best;
  for (const std::size_t i : starts) {
    const double xmin = x[i];
    const double base = xmin - offset;
    if (!(base > 0.0)) continue;
    const std::size_t n_tail = n - i;
    const double log_sum = suffix_log[i] - static_cast<double>(n_tail) * std::log(base);
    if (!(log_sum > 0.0)) continue;
    const double alpha = 1.0 + static_cast<double>(n_tail) / log_sum;
    auto cdf = [&](double v) { return 1.0 - std::pow((v + offset) / base, 1.0 - alpha); };

    double d = 0.0;
    const auto nt = static_cast<double>(n_tail);
    if (discrete) {
      for (std::size_t j = i; j < n; ++j) {
        if (j + 1 < n && x[j + 1] == x[j]) continue;
        d = std::max(d, std::fabs(static_cast<double>(j - i + 1) / nt - cdf(x[j])));
      }
    } else {
      for (std::size_t j = i; j < n; ++j) {
        const double f = cdf(x[j]);
        d = std::max({d, static_cast<double>(j - i + 1) / nt - f, f - static_cast<double>(j - i) / nt});
      }
    }
    if (!best || d < best->ks_stat) best = PowerLawFit{alpha, xmin, n_tail, d, discrete};
  }
  if (!best) throw Error("fit_powerlaw: degenerate sample (no tail with spread)");
  return *best;
}

// ---------------------------------------------------------------------------
// Activity counts. Per-user write counts are Poisson draws around a
// log-normal per-user rate; observed counts are zero-truncated (users with
// no writes never appear). The Poisson-lognormal fit separates the
// log-normal rate distribution from the counting noise.

struct ActivityFit {
  double mu = 0.0;
  double sigma = 0.0;
  std::size_t n = 0;          ///< users observed (count >= 1)
  double zero_prob = 0.0;     ///< fitted P(count = 0)
  double ks_stat = 0.0;
  bool ks_pass = false;
  bool ks_evaluated = false;

  /// Estimated population including silent users.
  [[nodiscard]] double population() const { return static_cast<double>(n) / (1.0 - zero_prob); }
};

namespace detail {

/// log P(count = c) for c ~ Poisson(exp(mu + sigma Z)), Z standard normal,
/// by Gauss-Hermite quadrature centred at the integrand's mode.
class PoissonLognormal {
 public:
  PoissonLognormal(double mu, double sigma) : mu_(mu), sigma_(sigma) {}

  [[nodiscard]] double log_pmf(std::uint64_t count) const {
    static const stats::GaussHermite gh = stats::gauss_hermite(24);
    const double c = static_cast<double>(count);
    const double lgc = std::lgamma(c + 1.0);
    auto log_integrand = [&](double z) {
      const double eta = mu_ + sigma_ * z;
      return c * eta - std::exp(eta) - lgc - 0.5 * z * z - 0.5 * std::log(2.0 * std::numbers::pi);
    };
    // Mode of the log-concave integrand: g(z) = c s - s e^{mu + s z} - z = 0.
    auto g = [&](double z) { return c * sigma_ - sigma_ * std::exp(mu_ + sigma_ * z) - z; };
    double lo = -40.0;
    double hi = 40.0;
    double z = std::clamp((std::log(std::max(c, 0.5)) - mu_) / sigma_, lo, hi);
    for (int it = 0; it < 100; ++it) {
      const double gz = g(z);
      if (gz > 0.0) lo = z; else hi = z;
      const double dg = -sigma_ * sigma_ * std::exp(mu_ + sigma_ * z) - 1.0;
      double next = z - gz / dg;
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      if (std::fabs(next - z) < 1e-12) {
        z = next;
        break;
      }
      z = next;
    }
    const double h = 1.0 / std::sqrt(sigma_ * sigma_ * std::exp(mu_ + sigma_ * z) + 1.0);
    const double peak = log_integrand(z);
    double acc = 0.0;
    for (std::size_t j = 0; j < gh.nodes.size(); ++j) {
      const double xj = gh.nodes[j];
      acc += gh.weights[j] * std::exp(xj * xj + log_integrand(z + std::numbers::sqrt2 * h * xj) - peak);
    }
    return peak + std::log(std::numbers::sqrt2 * h * acc);
  }

 private:
  double mu_;
  double sigma_;
};

using CountHistogram = std::map<std::uint64_t, std::uint64_t>;

inline double truncated_pln_nll(const CountHistogram& hist, double mu, double sigma) {
  const PoissonLognormal pln(mu, sigma);
  const double log_norm = std::log(-std::expm1(pln.log_pmf(0)));
  double nll = 0.0;
  for (const auto& [c, m] : hist) nll -= static_cast<double>(m) * (pln.log_pmf(c) - log_norm);
  return nll;
}

inline std::pair<double, double> fit_pln_params(const CountHistogram& hist) {
  double s = 0.0, ss = 0.0, n = 0.0;
  for (const auto& [c, m] : hist) {
    const double l = std::log(static_cast<double>(c));
    s += static_cast<double>(m) * l;
    ss += static_cast<double>(m) * l * l;
    n += static_cast<double>(m);
  }
  const double mu0 = s / n;
  const double sd0 = std::max(std::sqrt(std::max(ss / n - mu0 * mu0, 0.0)), 0.1);
  const auto best = stats::nelder_mead<2>(
      [&](const std::array<double, 2>& p) {
        const double sigma = std::exp(p[1]);
        if (!(sigma > 1e-4 && sigma < 20.0)) return 1e300;
        return truncated_pln_nll(hist, p[0], sigma);
      },
      {mu0, std::log(sd0)}, {0.25, 0.25}, 1e-12, 4000);
  return {best[0], std::exp(best[1])};
}

/// Discrete KS distance against the zero-truncated Poisson-lognormal CDF.
inline double truncated_pln_ks(const CountHistogram& hist, double mu, double sigma) {
  const PoissonLognormal pln(mu, sigma);
  const double norm = -std::expm1(pln.log_pmf(0));
  double n = 0.0;
  for (const auto& [c, m] : hist) n += static_cast<double>(m);
  double model = 0.0;
  double emp = 0.0;
  double d = 0.0;
  std::uint64_t next = 1;
  for (const auto& [c, m] : hist) {
    for (; next <= c; ++next) model += std::exp(pln.log_pmf(next)) / norm;
    emp += static_cast<double>(m) / n;
    d = std::max(d, std::fabs(emp - model));
  }
  return d;
}

}  // namespace detail

/// Fits the zero-truncated Poisson-lognormal model to positive integer
/// per-user counts.
inline ActivityFit fit_activity(std::span<const std::uint64_t> counts, const FitOptions& opt = {}) {
  if (counts.size() < 10) throw Error("fit_activity: need at least 10 users");
  detail::CountHistogram hist;
  for (const auto c : counts) {
    if (c == 0) throw Error("fit_activity: counts must be positive");
    ++hist[c];
  }
  if (hist.size() < 2) throw Error("fit_activity: degenerate sample (all counts equal)");
  const auto [mu, sigma] = detail::fit_pln_params(hist);
  ActivityFit fit;
  fit.mu = mu;
  fit.sigma = sigma;
  fit.n = counts.size();
  fit.zero_prob = std::exp(detail::PoissonLognormal(mu, sigma).log_pmf(0));
  fit.ks_stat = detail::truncated_pln_ks(hist, mu, sigma);
  if (opt.bootstrap > 0) {
    const std::size_t n = counts.size();
    fit.ks_pass = detail::bootstrap_pass(fit.ks_stat, opt, [&](Rng& rng) {
      detail::CountHistogram sim;
      for (std::size_t i = 0; i < n;) {
        const auto c = rng.poisson(rng.lognormal(mu, sigma));
        if (c == 0) continue;
        ++sim[c];
        ++i;
      }
      if (sim.size() < 2) return 1.0;
      const auto [m, s] = detail::fit_pln_params(sim);
      return detail::truncated_pln_ks(sim, m, s);
    });
    fit.ks_evaluated = true;
  }
  return fit;
}

// ---------------------------------------------------------------------------
// Inter-write times

/// Gaps in seconds between a user's successive writes. Same-millisecond
/// writes are separated by 1 ms so logarithms stay finite.
inline std::vector<double> inter_write_times(const EventTrace& trace, const UserId& user) {
  std::vector<std::int64_t> ts;
  for (const auto& e : trace.events()) {
    if (e.user == user) ts.push_back(e.timestamp_ms);
  }
  if (ts.size() < 2) throw Error("user '" + user + "' has fewer than 2 writes");
  std::vector<double> gaps;
  gaps.reserve(ts.size() - 1);
  for (std::size_t i = 1; i < ts.size(); ++i) {
    gaps.push_back(static_cast<double>(std::max<std::int64_t>(ts[i] - ts[i - 1], 1)) / 1000.0);
  }
  return gaps;
}

enum class GapFamily { lognormal, exponential };

/// Users ordered by write count (descending), ties by user id.
inline std::vector<UserId> most_active_users(const EventTrace& trace, std::size_t top_k) {
  const auto counts = per_user_counts(trace);
  if (top_k == 0) throw Error("top_k must be positive");
  if (top_k > counts.size()) {
    throw Error("top_k " + std::to_string(top_k) + " exceeds user count " + std::to_string(counts.size()));
  }
  std::vector<std::pair<UserId, std::uint64_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<UserId> out;
  for (std::size_t i = 0; i < top_k; ++i) out.push_back(ranked[i].first);
  return out;
}

/// Fraction of the top_k most active users whose inter-write gaps pass the
/// bootstrap KS test for `family`. Users with fewer than 10 gaps count as
/// failures.
inline double ks_pass_rate(const EventTrace& trace, std::size_t top_k, GapFamily family, const FitOptions& opt = {}) {
  const auto users = most_active_users(trace, top_k);
  // Per-user gap lists in one pass over the trace.
  std::map<UserId, std::vector<std::int64_t>> times;
  for (const auto& u : users) times[u];
  for (const auto& e : trace.events()) {
    if (auto it = times.find(e.user); it != times.end()) it->second.push_back(e.timestamp_ms);
  }
  std::size_t passed = 0;
  std::size_t index = 0;
  for (const auto& u : users) {
    const auto& ts = times[u];
    std::vector<double> gaps;
    for (std::size_t i = 1; i < ts.size(); ++i) {
      gaps.push_back(static_cast<double>(std::max<std::int64_t>(ts[i] - ts[i - 1], 1)) / 1000.0);
    }
    FitOptions per_user = opt;
    per_user.seed = derive_seed(opt.seed, index++);
    if (gaps.size() < 10) continue;
    try {
      const bool ok = family == GapFamily::lognormal ? fit_lognormal(gaps, per_user).ks_pass
                                                     : fit_exponential(gaps, per_user).ks_pass;
      if (ok) ++passed;
    } catch (const Error&) {
      // degenerate gap sample: counted as a failure
    }
  }
  return static_cast<double>(passed) / static_cast<double>(users.size());
}

// ---------------------------------------------------------------------------
// Independence and self-similarity

/// Sample autocorrelation r_0..r_max_lag (r_0 = 1).
inline std::vector<double> autocorrelation(std::span<const double> x, std::size_t max_lag) {
  if (x.size() <= max_lag) throw Error("autocorrelation: series shorter than max_lag + 1");
  const double m = stats::mean(x);
  double denom = 0.0;
  for (const double v : x) denom += (v - m) * (v - m);
  if (!(denom > 0.0)) throw Error("autocorrelation: zero-variance series");
  std::vector<double> r(max_lag + 1);
  r[0] = 1.0;
  for (std::size_t k = 1; k <= max_lag; ++k) {
    double s = 0.0;
    for (std::size_t t = 0; t + k < x.size(); ++t) s += (x[t] - m) * (x[t + k] - m);
    r[k] = std::clamp(s / denom, -1.0, 1.0);
  }
  return r;
}

inline std::vector<double> autocorrelation(const BinnedSeries& series, std::size_t max_lag) {
  const auto v = series.values();
  return autocorrelation(v, max_lag);
}

struct SelfSimilarityReport {
  std::vector<std::size_t> block_sizes;
  std::vector<double> variances;
  double slope = 0.0;
  double hurst = 0.0;  ///< 1 + slope / 2
};

/// Block sizes 1, 2, 4, ... up to length / 10.
inline std::vector<std::size_t> default_block_sizes(std::size_t length) {
  std::vector<std::size_t> m;
  for (std::size_t b = 1; b * 10 <= length; b *= 2) m.push_back(b);
  return m;
}

/// Variance-time analysis: variance of the series averaged over
/// non-overlapping blocks of size m, and the least-squares slope of
/// log10 variance against log10 m.
inline SelfSimilarityReport variance_time(std::span<const double> x, std::vector<std::size_t> block_sizes = {}) {
  if (block_sizes.empty()) block_sizes = default_block_sizes(x.size());
  if (block_sizes.size() < 2) throw Error("variance_time: need at least two block sizes to fit a slope");
  std::sort(block_sizes.begin(), block_sizes.end());
  block_sizes.erase(std::unique(block_sizes.begin(), block_sizes.end()), block_sizes.end());
  if (block_sizes.size() < 2 || block_sizes.front() == 0) throw Error("variance_time: invalid block sizes");
  if (block_sizes.back() * 10 > x.size()) {
    throw Error("variance_time: too few blocks at m = " + std::to_string(block_sizes.back()) +
                " (largest block must be <= length / 10)");
  }
  SelfSimilarityReport rep;
  rep.block_sizes = block_sizes;
  std::vector<double> lx, ly;
  for (const std::size_t m : block_sizes) {
    const std::size_t blocks = x.size() / m;
    std::vector<double> means(blocks);
    for (std::size_t b = 0; b < blocks; ++b) {
      double s = 0.0;
      for (std::size_t i = 0; i < m; ++i) s += x[b * m + i];
      means[b] = s / static_cast<double>(m);
    }
    const double v = stats::variance(means);
    if (!(v > 0.0)) throw Error("variance_time: zero variance at m = " + std::to_string(m));
    rep.variances.push_back(v);
    lx.push_back(std::log10(static_cast<double>(m)));
    ly.push_back(std::log10(v));
  }
  rep.slope = stats::least_squares(lx, ly).slope;
  rep.hurst = 1.0 + rep.slope / 2.0;
  return rep;
}

inline SelfSimilarityReport variance_time(const BinnedSeries& series, std::vector<std::size_t> block_sizes = {}) {
  const auto v = series.values();
  return variance_time(v, std::move(block_sizes));
}

// ---------------------------------------------------------------------------
// Composite report

struct CharacterizeOptions {
  std::int64_t bin_width_ms = 300'000;
  std::size_t max_lag = 10;
  std::size_t top_k = 100;
  FitOptions fit;
};

struct Characterization {
  std::size_t events = 0;
  std::size_t users = 0;
  std::size_t bins = 0;
  double bin_width_s = 0.0;
  std::optional<LogNormalFit> activity_lognormal;
  std::optional<PowerLawFit> activity_powerlaw;
  std::optional<ActivityFit> activity_counts;
  std::vector<double> acf;
  std::optional<SelfSimilarityReport> variance_time;
  std::optional<double> lognormal_pass_rate;
  std::optional<double> exponential_pass_rate;
  std::size_t top_k = 0;
  std::vector<std::string> notes;
};

inline Characterization characterize(const EventTrace& trace, const CharacterizeOptions& opt = {}) {
  if (trace.empty()) throw Error("cannot characterize an empty trace");
  Characterization c;
  c.events = trace.size();
  const auto counts = per_user_counts(trace);
  c.users = counts.size();
  const auto series = bin(trace, opt.bin_width_ms);
  c.bins = series.size();
  c.bin_width_s = series.bin_width_s();

  std::vector<double> activity;
  std::vector<std::uint64_t> activity_int;
  for (const auto& [u, n] : counts) {
    activity.push_back(static_cast<double>(n));
    activity_int.push_back(n);
  }
  auto attempt = [&](const char* what, auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      c.notes.push_back(std::string(what) + ": " + e.what());
    }
  };
  attempt("activity log-normal fit", [&] { c.activity_lognormal = fit_lognormal(activity, opt.fit); });
  attempt("activity power-law fit", [&] { c.activity_powerlaw = fit_powerlaw(activity); });
  FitOptions no_boot = opt.fit;
  no_boot.bootstrap = 0;
  attempt("activity Poisson-lognormal fit", [&] { c.activity_counts = fit_activity(activity_int, no_boot); });
  attempt("autocorrelation", [&] { c.acf = autocorrelation(series, opt.max_lag); });
  attempt("variance-time", [&] { c.variance_time = variance_time(series); });
  c.top_k = std::min(opt.top_k, c.users);
  attempt("inter-write KS", [&] {
    c.lognormal_pass_rate = ks_pass_rate(trace, c.top_k, GapFamily::lognormal, opt.fit);
    c.exponential_pass_rate = ks_pass_rate(trace, c.top_k, GapFamily::exponential, opt.fit);
  });
  return c;
}

inline std::string format_report(const Characterization& c) {
  using kv::format_double;
  kv::Document doc("#song-report v1");
  auto& t = doc.section("trace");
  t.set("events", std::to_string(c.events));
  t.set("users", std::to_string(c.users));
  t.set("bins", std::to_string(c.bins));
  t.set("bin_width_s", format_double(c.bin_width_s));
  if (c.activity_lognormal) {
    auto& s = doc.section("activity.lognormal");
    s.set("mu", format_double(c.activity_lognormal->mu));
    s.set("sigma", format_double(c.activity_lognormal->sigma));
    s.set("n", std::to_string(c.activity_lognormal->n));
    s.set("ks_stat", format_double(c.activity_lognormal->ks_stat));
    s.set("ks_pass", c.activity_lognormal->ks_evaluated ? (c.activity_lognormal->ks_pass ? "true" : "false")
                                                        : "not-tested");
  }
  if (c.activity_counts) {
    auto& s = doc.section("activity.poisson_lognormal");
    s.set("mu", format_double(c.activity_counts->mu));
    s.set("sigma", format_double(c.activity_counts->sigma));
    s.set("zero_prob", format_double(c.activity_counts->zero_prob));
    s.set("ks_stat", format_double(c.activity_counts->ks_stat));
  }
  if (c.activity_powerlaw) {
    auto& s = doc.section("activity.powerlaw");
    s.set("alpha", format_double(c.activity_powerlaw->alpha));
    s.set("xmin", format_double(c.activity_powerlaw->xmin));
    s.set("n_tail", std::to_string(c.activity_powerlaw->n_tail));
    s.set("ks_stat", format_double(c.activity_powerlaw->ks_stat));
    if (c.activity_lognormal) {
      s.set("better_fit", c.activity_lognormal->ks_stat <= c.activity_powerlaw->ks_stat ? "lognormal" : "powerlaw");
    }
  }
  if (c.lognormal_pass_rate) {
    auto& s = doc.section("inter_write");
    s.set("top_k", std::to_string(c.top_k));
    s.set("lognormal_pass_rate", format_double(*c.lognormal_pass_rate));
    s.set("exponential_pass_rate", format_double(*c.exponential_pass_rate));
  }
  if (!c.acf.empty()) {
    auto& s = doc.section("autocorrelation");
    for (std::size_t k = 1; k < c.acf.size(); ++k) s.set("acf" + std::to_string(k), format_double(c.acf[k]));
  }
  if (c.variance_time) {
    auto& s = doc.section("variance_time");
    s.set("slope", format_double(c.variance_time->slope));
    s.set("hurst", format_double(c.variance_time->hurst));
    s.set("points", std::to_string(c.variance_time->block_sizes.size()));
  }
  if (!c.notes.empty()) {
    auto& s = doc.section("notes");
    for (const auto& n : c.notes) s.set("note", n);
  }
  return doc.str();
}

}  // namespace song
