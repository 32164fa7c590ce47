#pragma once

#include <algorithm>
#include <functional>

#include "hslab/experiments/probes.hpp"
#include "hslab/pseudo/trajectory.hpp"

namespace hslab {

/// k creation records with times in (0.05 t, 0.95 t), newest first.
inline std::vector<CreationRecord> random_records(Engine& g, std::size_t s, std::size_t k, double t, int dim) {
  std::vector<double> times(k);
  for (auto& a : times) a = t * (0.05 + 0.9 * uniform01(g));
  std::sort(times.begin(), times.end(), std::greater<>());
  std::vector<CreationRecord> recs(k);
  for (std::size_t j = 0; j < k; ++j) {
    recs[j].time = times[j];
    recs[j].velocity = gaussian_vec(g, dim);
    recs[j].omega = uniform_sphere(g, dim);
    recs[j].parent = static_cast<std::size_t>(g() % (s + j));
  }
  return recs;
}

/// A well-defined pseudo-trajectory, redrawn until build succeeds.
inline PseudoTrajectory random_pseudo_trajectory(Engine& g, std::size_t s, std::size_t k, double t, int dim,
                                                 double eps, double sigma_x = 1.0) {
  for (;;) {
    const auto root = random_cluster(g, s, dim, eps, sigma_x, 1.0);
    try {
      auto pt = build(root, t, random_records(g, s, k, t, dim));
      if (pt.ok()) return pt;
    } catch (const DegenerateConfiguration&) {
    }
  }
}

}  // namespace hslab
