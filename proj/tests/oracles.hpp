#pragma once

// Independent reference computations used as test oracles. Random draws
// here come from <random> rather than song::Rng so that sampler and fitter
// do not share code.

#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "song/trace.hpp"

namespace oracle {

inline std::vector<std::complex<double>> direct_dft(const std::vector<std::complex<double>>& x) {
  const std::size_t n = x.size();
  std::vector<std::complex<double>> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> s = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      const double ang = -2.0 * std::numbers::pi * static_cast<double>((k * t) % n) / static_cast<double>(n);
      s += x[t] * std::polar(1.0, ang);
    }
    out[k] = s;
  }
  return out;
}

/// Amplitude of frequency k in a real series by direct projection.
inline double tone_amplitude(const std::vector<double>& x, std::size_t k) {
  const auto n = static_cast<double>(x.size());
  double c = 0.0, s = 0.0;
  for (std::size_t t = 0; t < x.size(); ++t) {
    const double ang = 2.0 * std::numbers::pi * static_cast<double>(k) * static_cast<double>(t) / n;
    c += x[t] * std::cos(ang);
    s += x[t] * std::sin(ang);
  }
  return 2.0 * std::hypot(c, s) / n;
}

inline double mean(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

inline double variance(const std::vector<double>& x) {
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

/// Pareto(alpha, xmin) by inversion.
inline std::vector<double> pareto(std::size_t n, double alpha, double xmin, std::uint64_t seed) {
  std::mt19937_64 g(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> out(n);
  for (auto& v : out) v = xmin * std::pow(1.0 - u(g), -1.0 / (alpha - 1.0));
  return out;
}

inline std::vector<double> lognormal(std::size_t n, double mu, double sigma, std::uint64_t seed) {
  std::mt19937_64 g(seed);
  std::lognormal_distribution<double> d(mu, sigma);
  std::vector<double> out(n);
  for (auto& v : out) v = d(g);
  return out;
}

inline std::vector<double> normal(std::size_t n, double mu, double sd, std::uint64_t seed) {
  std::mt19937_64 g(seed);
  std::normal_distribution<double> d(mu, sd);
  std::vector<double> out(n);
  for (auto& v : out) v = d(g);
  return out;
}

using Edge = std::pair<std::string, std::string>;  // (follower, followee)

/// Sum over writes of 1 + number of followers, from a plain edge list.
inline std::uint64_t fanout_sum(const song::EventTrace& trace, const std::vector<Edge>& edges) {
  std::map<std::string, std::uint64_t> followers;
  for (const auto& [a, b] : std::set<Edge>(edges.begin(), edges.end())) ++followers[b];
  std::uint64_t total = 0;
  for (const auto& e : trace.events()) {
    const auto it = followers.find(e.user);
    total += 1 + (it == followers.end() ? 0 : it->second);
  }
  return total;
}

inline song::SocialGraph graph_of(const std::vector<Edge>& edges) {
  song::SocialGraph g;
  for (const auto& [a, b] : edges) g.add_edge(a, b);
  return g;
}

}  // namespace oracle
