#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include "hslab/core/vec.hpp"

namespace hslab {

/// SplitMix64 finalizer; the per-stream seed derivation for all experiments.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of stream `index` under `master`: a splittable counter, so run k of
/// any experiment is reproducible without replaying runs 0..k-1.
constexpr std::uint64_t stream_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(splitmix64(master) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

using Engine = std::mt19937_64;

inline Engine make_engine(std::uint64_t master, std::uint64_t index = 0) {
  return Engine(stream_seed(master, index));
}

inline double uniform01(Engine& g) { return std::uniform_real_distribution<double>(0.0, 1.0)(g); }

inline double standard_normal(Engine& g) { return std::normal_distribution<double>(0.0, 1.0)(g); }

inline Vec gaussian_vec(Engine& g, int dim, double sigma = 1.0, const Vec& mean = {}) {
  Vec v;
  for (int k = 0; k < dim; ++k)
    v[static_cast<std::size_t>(k)] = mean[static_cast<std::size_t>(k)] + sigma * standard_normal(g);
  return v;
}

/// Uniform direction on S^{d-1}.
inline Vec uniform_sphere(Engine& g, int dim) {
  for (;;) {
    Vec v = gaussian_vec(g, dim);
    const double n = norm(v);
    if (n > 1e-12) return v * (1.0 / n);
  }
}

/// Surface area |S^{d-1}|.
inline double sphere_area(int dim) {
  return dim == 2 ? 2.0 * std::numbers::pi : 4.0 * std::numbers::pi;
}

/// Volume of the unit ball in R^n.
inline double unit_ball_volume(int n) {
  return std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n + 1.0);
}

}  // namespace hslab
