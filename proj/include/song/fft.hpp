#pragma once

// Discrete Fourier transform of arbitrary length, backed by FFTW:
//   X_k = sum_t x_t exp(-2 pi i k t / n).

#include <fftw3.h>

#include <complex>
#include <mutex>
#include <span>
#include <vector>

#include "song/core.hpp"

namespace song::fft {

using cplx = std::complex<double>;

namespace detail {

// The FFTW planner is not thread-safe; execution of a plan is.
inline std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

inline void transform(std::vector<cplx>& a, int sign) {
  if (a.empty()) return;
  auto* data = reinterpret_cast<fftw_complex*>(a.data());
  fftw_plan plan;
  {
    std::lock_guard lock(planner_mutex());
    plan = fftw_plan_dft_1d(static_cast<int>(a.size()), data, data, sign, FFTW_ESTIMATE);
  }
  if (!plan) throw Error("fft: FFTW could not create a plan");
  fftw_execute(plan);
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(plan);
}

}  // namespace detail

inline std::vector<cplx> forward(std::vector<cplx> a) {
  detail::transform(a, FFTW_FORWARD);
  return a;
}

/// Inverse transform including the 1/n factor.
inline std::vector<cplx> inverse(std::vector<cplx> a) {
  detail::transform(a, FFTW_BACKWARD);
  const double scale = 1.0 / static_cast<double>(a.size());
  for (auto& v : a) v *= scale;
  return a;
}

inline std::vector<cplx> forward_real(std::span<const double> x) {
  return forward(std::vector<cplx>(x.begin(), x.end()));
}

}  // namespace song::fft
