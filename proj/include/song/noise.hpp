#pragma once

// The stochastic term W_t and the peakedness a:
// residual extraction, normality diagnostics, WGN/FGN synthesis.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "song/core.hpp"
#include "song/diurnal.hpp"
#include "song/fft.hpp"
#include "song/random.hpp"
#include "song/stats.hpp"
#include "song/trace.hpp"

namespace song {

enum class NoiseFamily { wgn, fgn };

inline std::string to_string(NoiseFamily f) { return f == NoiseFamily::wgn ? "wgn" : "fgn"; }

inline NoiseFamily parse_noise_family(std::string_view s) {
  if (s == "wgn") return NoiseFamily::wgn;
  if (s == "fgn") return NoiseFamily::fgn;
  throw Error("unknown noise family '" + std::string(s) + "' (expected wgn or fgn)");
}

struct NoiseModel {
  NoiseFamily family = NoiseFamily::wgn;
  double peakedness = 0.0;  ///< a, in units of writes per bin
  double hurst = 0.5;       ///< FGN only
  std::uint64_t seed = kDefaultSeed;

  void validate() const {
    if (!(peakedness >= 0.0)) throw Error("noise model: peakedness must be non-negative");
    if (family == NoiseFamily::fgn && !(hurst > 0.5 && hurst < 1.0)) {
      throw Error("noise model: FGN requires 0.5 < H < 1");
    }
  }
};

/// Bins with m_t at or below this are excluded from residuals.
inline constexpr double kResidualEpsilon = 1e-6;

/// z_t = (x_t - m_t) / sqrt(m_t) over bins where m_t > epsilon.
struct ResidualSeries {
  std::vector<double> values;
  std::int64_t bin_width_ms = 0;
  std::size_t skipped = 0;
};

inline ResidualSeries extract_residual(std::span<const double> observed, std::span<const double> mean,
                                       std::int64_t bin_width_ms = 0) {
  if (observed.size() != mean.size()) {
    throw Error("extract_residual: series has " + std::to_string(observed.size()) + " bins, mean has " +
                std::to_string(mean.size()));
  }
  ResidualSeries r{{}, bin_width_ms, 0};
  r.values.reserve(observed.size());
  for (std::size_t t = 0; t < observed.size(); ++t) {
    if (mean[t] > kResidualEpsilon) {
      r.values.push_back((observed[t] - mean[t]) / std::sqrt(mean[t]));
    } else {
      ++r.skipped;
    }
  }
  return r;
}

/// Residual of a binned series against a diurnal model aligned on the
/// model's origin.
inline ResidualSeries extract_residual(const BinnedSeries& series, const DiurnalModel& model) {
  if (series.bin_width_ms != model.bin_width_ms) throw Error("extract_residual: bin widths differ");
  if ((series.origin_ms - model.origin_ms) % model.bin_width_ms != 0) {
    throw Error("extract_residual: series and model bins are not aligned");
  }
  const double first = static_cast<double>((series.origin_ms - model.origin_ms) / model.bin_width_ms);
  const auto mean = model.evaluate_range(first, series.size());
  const auto x = series.values();
  return extract_residual(x, mean, series.bin_width_ms);
}

/// a-hat = sample variance of z over [first, last) (whole series by default).
inline double estimate_peakedness(const ResidualSeries& residual, std::size_t first = 0,
                                  std::size_t last = static_cast<std::size_t>(-1)) {
  last = std::min(last, residual.values.size());
  if (first >= last || last - first < 30) throw Error("estimate_peakedness: need at least 30 residual points");
  return stats::variance(std::span<const double>(residual.values).subspan(first, last - first));
}

struct NormalityReport {
  double ad_stat = 0.0;  ///< adjusted A*^2
  bool ad_pass = false;
  std::vector<std::pair<double, double>> qq;  ///< (theoretical, empirical)
};

/// Anderson-Darling critical value at 5% with mean and variance estimated.
inline constexpr double kAdCritical5 = 0.787;

/// Anderson-Darling test for normality with estimated mean and variance.
/// The statistic is adjusted as A*^2 = A^2 (1 + 4/n - 25/n^2).
inline NormalityReport normality_report(std::span<const double> z) {
  const std::size_t n = z.size();
  if (n < 30) throw Error("normality_report: need at least 30 points");
  std::vector<double> sorted(z.begin(), z.end());
  std::sort(sorted.begin(), sorted.end());
  const double m = stats::mean(sorted);
  const double sd = std::sqrt(stats::variance(sorted));
  if (!(sd > 0.0)) throw Error("normality_report: zero-variance sample");

  const auto nd = static_cast<double>(n);
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double lo = (sorted[i] - m) / sd;
    const double hi = (sorted[n - 1 - i] - m) / sd;
    // ln Phi(lo) and ln(1 - Phi(hi)) through erfc to keep the tails accurate.
    const double log_cdf = std::log(0.5 * std::erfc(-lo / std::numbers::sqrt2));
    const double log_sf = std::log(0.5 * std::erfc(hi / std::numbers::sqrt2));
    s += (2.0 * static_cast<double>(i) + 1.0) * (log_cdf + log_sf);
  }
  const double a2 = -nd - s / nd;
  NormalityReport rep;
  rep.ad_stat = a2 * (1.0 + 4.0 / nd - 25.0 / (nd * nd));
  rep.ad_pass = rep.ad_stat < kAdCritical5;
  rep.qq.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    rep.qq.emplace_back(stats::normal_quantile((static_cast<double>(i) + 0.5) / nd), sorted[i]);
  }
  return rep;
}

inline NormalityReport normality_report(const ResidualSeries& r) { return normality_report(r.values); }

// ---------------------------------------------------------------------------
// Samplers

/// WGN is produced in fixed segments, each from its own derived stream, so
/// the output does not depend on how segments are spread over threads.
inline constexpr std::size_t kNoiseSegment = 4096;

inline std::vector<double> sample_wgn(std::size_t n, std::uint64_t seed, unsigned workers = 1) {
  std::vector<double> out(n);
  const std::size_t segments = (n + kNoiseSegment - 1) / kNoiseSegment;
  auto fill = [&](std::size_t seg) {
    Rng rng(derive_seed(seed, seg));
    const std::size_t end = std::min(n, (seg + 1) * kNoiseSegment);
    for (std::size_t i = seg * kNoiseSegment; i < end; ++i) out[i] = rng.normal();
  };
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(segments, 1))));
  if (workers == 1) {
    for (std::size_t s = 0; s < segments; ++s) fill(s);
    return out;
  }
  std::vector<std::jthread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t s = w; s < segments; s += workers) fill(s);
    });
  }
  return out;
}

/// Autocovariance of unit-variance FGN at lag k.
inline double fgn_autocovariance(double hurst, std::size_t k) {
  const double h2 = 2.0 * hurst;
  const auto kd = static_cast<double>(k);
  return 0.5 * (std::pow(kd + 1.0, h2) - 2.0 * std::pow(kd, h2) + std::pow(std::fabs(kd - 1.0), h2));
}

/// Exact FGN by circulant embedding (Davies-Harte). The embedding size is
/// doubled up to twice if an eigenvalue comes out negative.
inline std::vector<double> sample_fgn(std::size_t n, double hurst, std::uint64_t seed) {
  if (!(hurst > 0.5 && hurst < 1.0)) throw Error("sample_fgn: H must lie in (0.5, 1)");
  if (n == 0) return {};
  if (n == 1) return {Rng(seed).normal()};
  std::size_t m = std::bit_ceil(2 * (n - 1));
  for (int attempt = 0; attempt < 3; ++attempt, m *= 2) {
    std::vector<fft::cplx> row(m);
    for (std::size_t k = 0; k <= m / 2; ++k) row[k] = fgn_autocovariance(hurst, k);
    for (std::size_t k = m / 2 + 1; k < m; ++k) row[k] = row[m - k];
    const auto eig = fft::forward(std::move(row));
    std::vector<double> lambda(m);
    bool ok = true;
    double peak = 0.0;
    for (std::size_t k = 0; k < m; ++k) peak = std::max(peak, std::fabs(eig[k].real()));
    for (std::size_t k = 0; k < m; ++k) {
      const double v = eig[k].real();
      if (v < -1e-10 * peak) {
        ok = false;
        break;
      }
      lambda[k] = std::max(v, 0.0);
    }
    if (!ok) continue;

    Rng rng(seed);
    const auto md = static_cast<double>(m);
    std::vector<fft::cplx> w(m);
    w[0] = std::sqrt(lambda[0] / md) * rng.normal();
    w[m / 2] = std::sqrt(lambda[m / 2] / md) * rng.normal();
    for (std::size_t k = 1; k < m / 2; ++k) {
      const double scale = std::sqrt(lambda[k] / (2.0 * md));
      const double re = rng.normal();
      const double im = rng.normal();
      w[k] = scale * fft::cplx(re, im);
      w[m - k] = std::conj(w[k]);
    }
    const auto z = fft::forward(std::move(w));
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = z[i].real();
    return out;
  }
  throw Error("sample_fgn: circulant embedding is not non-negative definite");
}

/// W_t for the given model: n unit-variance values from `seed`.
inline std::vector<double> sample_noise(const NoiseModel& model, std::size_t n, std::uint64_t seed,
                                        unsigned workers = 1) {
  return model.family == NoiseFamily::wgn ? sample_wgn(n, seed, workers) : sample_fgn(n, model.hurst, seed);
}

}  // namespace song
