#pragma once

#include <algorithm>
#include <cmath>

#include "hslab/core/configuration.hpp"
#include "hslab/numerics/rng.hpp"

namespace hslab {

/// Gaussian cluster of s non-overlapping spheres; each new centre is redrawn
/// until it clears the earlier ones.
inline Configuration random_cluster(Engine& g, std::size_t s, int dim, double eps, double sigma_x,
                                    double sigma_v) {
  Configuration z(dim, eps);
  while (z.count() < s) {
    const Vec x = gaussian_vec(g, dim, sigma_x);
    bool clear = true;
    for (const auto& y : z.x) clear = clear && norm(x - y) > eps * (1 + 1e-6);
    if (clear) z.push_back(x, gaussian_vec(g, dim, sigma_v));
  }
  return z;
}

inline double max_abs_diff(const Configuration& a, const Configuration& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.count(); ++i)
    for (std::size_t k = 0; k < 3; ++k) {
      m = std::max(m, std::abs(a.x[i][k] - b.x[i][k]));
      m = std::max(m, std::abs(a.v[i][k] - b.v[i][k]));
    }
  return m;
}

inline double coordinate_norm(const Configuration& z) {
  double s = 0.0;
  for (double c : flatten(z)) s += c * c;
  return std::sqrt(s);
}

}  // namespace hslab
