#pragma once

// The slowly varying mean m_t as a truncated Fourier series.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "song/core.hpp"
#include "song/fft.hpp"
#include "song/kvfile.hpp"
#include "song/trace.hpp"

namespace song {

/// One sinusoid amplitude * cos(2 pi k t / length + phase).
struct FourierComponent {
  std::size_t k = 0;
  double amplitude = 0.0;
  double phase = 0.0;

  friend bool operator==(const FourierComponent&, const FourierComponent&) = default;
};

/// m_t over a period of `length` bins, extended periodically. Bin index 0
/// starts at origin_ms.
struct DiurnalModel {
  std::int64_t bin_width_ms = 300'000;
  std::int64_t origin_ms = 0;
  std::size_t length = 1;
  double mean_level = 0.0;
  std::vector<FourierComponent> components;  ///< ascending k
  /// Share of the series variance carried by the components (fit only).
  double energy_fraction = 1.0;

  /// Unclamped Fourier sum at (possibly fractional) bin index t.
  [[nodiscard]] double raw(double t) const {
    double v = mean_level;
    const double w = 2.0 * std::numbers::pi / static_cast<double>(length);
    for (const auto& c : components) {
      // Reduce k*t modulo the period before scaling to keep the argument small.
      const double kt = std::fmod(static_cast<double>(c.k) * t, static_cast<double>(length));
      v += c.amplitude * std::cos(w * kt + c.phase);
    }
    return v;
  }

  /// m_t clamped at zero.
  [[nodiscard]] double evaluate(double t) const { return std::max(0.0, raw(t)); }

  /// m_t for `n` consecutive bins starting at bin index `first`.
  [[nodiscard]] std::vector<double> evaluate_range(double first, std::size_t n) const {
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = evaluate(first + static_cast<double>(i));
    return out;
  }

  void validate() const {
    if (bin_width_ms <= 0) throw Error("diurnal model: bin width must be positive");
    if (length == 0) throw Error("diurnal model: length must be positive");
    if (!(mean_level >= 0.0)) throw Error("diurnal model: mean level must be non-negative");
    for (std::size_t i = 0; i < components.size(); ++i) {
      if (components[i].k == 0 || components[i].k > length / 2) {
        throw Error("diurnal model: frequency index out of range");
      }
      if (i > 0 && components[i].k <= components[i - 1].k) {
        throw Error("diurnal model: frequency indices must be distinct and ascending");
      }
    }
  }
};

/// Stopping rule for component selection. Components are taken in order of
/// decreasing energy until the retained share of variance reaches
/// target_energy or top_k components are held, whichever comes first.
struct DiurnalFitOptions {
  std::optional<double> target_energy;
  std::optional<std::size_t> top_k;
};

/// Spectrum of a real series as physical components (conjugate pairs
/// merged). Energy of a component is its contribution to the population
/// variance: A^2 / 2, or A^2 at the Nyquist index.
struct Spectrum {
  double mean = 0.0;
  std::vector<FourierComponent> components;  ///< k = 1 .. n/2
  std::vector<double> energy;
  double total_variance = 0.0;
};

inline Spectrum spectrum(std::span<const double> x) {
  const std::size_t n = x.size();
  const auto X = fft::forward_real(x);
  Spectrum s;
  const auto nd = static_cast<double>(n);
  s.mean = X[0].real() / nd;
  for (std::size_t k = 1; k <= n / 2; ++k) {
    const bool nyquist = 2 * k == n;
    const double amp = (nyquist ? 1.0 : 2.0) * std::abs(X[k]) / nd;
    s.components.push_back({k, amp, std::arg(X[k])});
    s.energy.push_back(nyquist ? amp * amp : amp * amp / 2.0);
  }
  s.total_variance = std::accumulate(s.energy.begin(), s.energy.end(), 0.0);
  return s;
}

inline DiurnalModel fit_diurnal(std::span<const double> x, std::int64_t bin_width_ms, std::int64_t origin_ms,
                                const DiurnalFitOptions& opt) {
  if (x.size() < 2) throw Error("fit_diurnal: need at least 2 bins");
  if (!opt.target_energy && !opt.top_k) throw Error("fit_diurnal: give target_energy or top_k");
  if (opt.target_energy && !(*opt.target_energy > 0.0 && *opt.target_energy <= 1.0)) {
    throw Error("fit_diurnal: target_energy must lie in (0, 1]");
  }
  if (opt.top_k && *opt.top_k == 0) throw Error("fit_diurnal: top_k must be >= 1");
  if (std::all_of(x.begin(), x.end(), [](double v) { return v == 0.0; })) {
    throw Error("fit_diurnal: all-zero series");
  }

  const auto s = spectrum(x);
  DiurnalModel model;
  model.bin_width_ms = bin_width_ms;
  model.origin_ms = origin_ms;
  model.length = x.size();
  model.mean_level = std::max(0.0, s.mean);

  std::vector<std::size_t> order(s.components.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return s.energy[a] > s.energy[b]; });

  double kept = 0.0;
  const std::size_t limit = opt.top_k.value_or(order.size());
  for (const std::size_t i : order) {
    if (model.components.size() >= limit) break;
    if (opt.target_energy && kept >= *opt.target_energy * s.total_variance * (1.0 - 1e-12)) break;
    if (s.energy[i] <= 0.0) break;
    model.components.push_back(s.components[i]);
    kept += s.energy[i];
  }
  std::sort(model.components.begin(), model.components.end(),
            [](const auto& a, const auto& b) { return a.k < b.k; });
  model.energy_fraction = s.total_variance > 0.0 ? kept / s.total_variance : 1.0;
  return model;
}

inline DiurnalModel fit_diurnal(const BinnedSeries& series, const DiurnalFitOptions& opt) {
  const auto v = series.values();
  return fit_diurnal(v, series.bin_width_ms, series.origin_ms, opt);
}

/// A requested wave for the off-the-shelf builder.
struct Wave {
  double period_s = 86'400.0;
  double amplitude = 0.0;
  double phase = 0.0;
};

/// Builds m_t from chosen waves. Periods are snapped to whole bins and the
/// model period is the longest wave; each wave's frequency index is the
/// nearest integer number of its cycles per model period. Snapping and
/// trough clamping are reported through `warnings`.
inline DiurnalModel build_offtheshelf(double mean_level, std::span<const Wave> waves, std::int64_t bin_width_ms,
                                      std::vector<std::string>* warnings = nullptr,
                                      std::optional<std::size_t> length_bins = std::nullopt) {
  if (!(mean_level >= 0.0)) throw Error("build_offtheshelf: mean level must be non-negative");
  if (bin_width_ms <= 0) throw Error("build_offtheshelf: bin width must be positive");
  auto warn = [&](std::string msg) {
    if (warnings) warnings->push_back(std::move(msg));
  };
  const double bin_s = static_cast<double>(bin_width_ms) / 1000.0;

  std::vector<double> period_bins;
  for (const auto& w : waves) {
    if (!(w.amplitude >= 0.0)) throw Error("build_offtheshelf: amplitudes must be non-negative");
    if (!(w.period_s > 0.0)) throw Error("build_offtheshelf: periods must be positive");
    const double exact = w.period_s / bin_s;
    const double snapped = std::max(2.0, std::round(exact));
    if (snapped != exact) {
      warn("period " + kv::format_double(w.period_s) + " s snapped to " + kv::format_double(snapped * bin_s) + " s");
    }
    period_bins.push_back(snapped);
  }
  DiurnalModel model;
  model.bin_width_ms = bin_width_ms;
  model.mean_level = mean_level;
  model.length = length_bins.value_or(
      period_bins.empty() ? 1 : static_cast<std::size_t>(*std::max_element(period_bins.begin(), period_bins.end())));
  if (model.length == 0) throw Error("build_offtheshelf: length must be positive");

  double amplitude_sum = 0.0;
  for (std::size_t i = 0; i < waves.size(); ++i) {
    const double cycles = static_cast<double>(model.length) / period_bins[i];
    const auto k = static_cast<std::size_t>(std::max(1.0, std::round(cycles)));
    if (static_cast<double>(k) != cycles) {
      warn("period " + kv::format_double(period_bins[i] * bin_s) + " s does not divide the model period; using " +
           kv::format_double(static_cast<double>(model.length) / static_cast<double>(k) * bin_s) + " s");
    }
    if (k > model.length / 2) throw Error("build_offtheshelf: period shorter than two bins");
    auto it = std::find_if(model.components.begin(), model.components.end(), [&](const auto& c) { return c.k == k; });
    if (it != model.components.end()) throw Error("build_offtheshelf: two waves map to the same frequency");
    model.components.push_back({k, waves[i].amplitude, waves[i].phase});
    amplitude_sum += waves[i].amplitude;
  }
  std::sort(model.components.begin(), model.components.end(),
            [](const auto& a, const auto& b) { return a.k < b.k; });
  if (amplitude_sum > mean_level) {
    warn("wave amplitudes exceed the mean level; troughs are clamped at 0");
  }
  model.validate();
  return model;
}

/// Default diurnal template: a 24 h wave of amplitude a1 and a 12 h wave of
/// amplitude a1 / 3, both peaking at t = 0.
inline DiurnalModel default_diurnal(double mean_level, double a1, std::int64_t bin_width_ms,
                                    std::vector<std::string>* warnings = nullptr) {
  const Wave waves[] = {{86'400.0, a1, 0.0}, {43'200.0, a1 / 3.0, 0.0}};
  return build_offtheshelf(mean_level, waves, bin_width_ms, warnings);
}

}  // namespace song
