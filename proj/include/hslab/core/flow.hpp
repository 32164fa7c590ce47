#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "hslab/core/collision.hpp"
#include "hslab/core/configuration.hpp"
#include "hslab/core/errors.hpp"
#include "hslab/core/tolerances.hpp"

namespace hslab {

/// One binary collision. Velocities are physical (never time-flipped); `pre`
/// is the pair as first met along the flow direction, `post` the other side.
struct CollisionEvent {
  double time = 0.0;
  std::size_t i = 0;
  std::size_t j = 0;
  Vec omega;  ///< x_j = x_i + eps * omega at contact
  std::pair<Vec, Vec> pre;
  std::pair<Vec, Vec> post;
};

struct FlowResult {
  Configuration final;
  std::vector<CollisionEvent> events;
  double elapsed = 0.0;
  /// Full state at each event, positions at contact, velocities `pre`.
  /// Filled only when FlowOptions::snapshots is set.
  std::vector<Configuration> snapshots;
};

struct FlowOptions {
  Tolerances tol{};
  bool snapshots = false;
  bool validate_input = true;
  /// Above this particle count the cell-list event queue is used.
  std::size_t all_pairs_limit = 8;
  /// Cell edge for the cell-list engine; <= 0 picks twice the diameter.
  double cell_size = 0.0;
};

namespace detail {

struct PairHit {
  std::size_t i, j;
  double t;
};

/// Forward event loop with an all-pairs rescan after every event. Intended
/// for hierarchy-scale particle counts.
inline FlowResult flow_forward_all_pairs(Configuration z, double duration,
                                         const FlowOptions& opt) {
  FlowResult res;
  const std::size_t s = z.count();
  const double eps = z.diameter;
  double now = 0.0;
  std::vector<PairHit> hits;
  for (;;) {
    const double remaining = duration - now;
    hits.clear();
    double tmin = INFINITY;
    double graze_min = INFINITY;
    for (std::size_t i = 0; i < s; ++i) {
      for (std::size_t j = i + 1; j < s; ++j) {
        const auto q = impact_query(z.x[i], z.v[i], z.x[j], z.v[j], eps, opt.tol);
        switch (q.kind) {
          case ImpactKind::none:
            break;
          case ImpactKind::contact:
            throw DegenerateConfiguration("pair " + std::to_string(i) + "," +
                                          std::to_string(j) +
                                          " sits on a pre-collisional contact");
          case ImpactKind::graze:
            graze_min = std::min(graze_min, q.time);
            break;
          case ImpactKind::hit:
            hits.push_back({i, j, q.time});
            tmin = std::min(tmin, q.time);
            break;
        }
      }
    }
    if (graze_min < std::min(tmin, remaining))
      throw DegenerateConfiguration("grazing contact along the trajectory");
    if (!(tmin < remaining)) {
      for (std::size_t i = 0; i < s; ++i) z.x[i] += z.v[i] * remaining;
      break;
    }
    std::erase_if(hits, [&](const PairHit& h) { return h.t > tmin + opt.tol.tie; });
    std::sort(hits.begin(), hits.end(), [](const PairHit& a, const PairHit& b) {
      return std::pair(a.i, a.j) < std::pair(b.i, b.j);
    });
    for (std::size_t a = 0; a < hits.size(); ++a)
      for (std::size_t b = a + 1; b < hits.size(); ++b)
        if (hits[a].i == hits[b].i || hits[a].i == hits[b].j || hits[a].j == hits[b].i ||
            hits[a].j == hits[b].j)
          throw DegenerateConfiguration("simultaneous contacts share a particle");
    for (std::size_t i = 0; i < s; ++i) z.x[i] += z.v[i] * tmin;
    now += tmin;
    if (opt.snapshots)
      for (std::size_t a = 0; a < hits.size(); ++a) res.snapshots.push_back(z);
    for (const auto& h : hits) {
      Vec omega = z.x[h.j] - z.x[h.i];
      omega *= 1.0 / norm(omega);
      CollisionEvent ev;
      ev.time = now;
      ev.i = h.i;
      ev.j = h.j;
      ev.omega = omega;
      ev.pre = {z.v[h.i], z.v[h.j]};
      const double k = dot(omega, z.v[h.j] - z.v[h.i]);
      z.v[h.i] += omega * k;
      z.v[h.j] -= omega * k;
      ev.post = {z.v[h.i], z.v[h.j]};
      res.events.push_back(ev);
    }
    if (res.events.size() > opt.tol.max_events)
      throw RunawayDynamics("collision budget exceeded");
  }
  res.final = std::move(z);
  res.elapsed = duration;
  return res;
}

}  // namespace detail

}  // namespace hslab

#include "hslab/core/cell_flow.hpp"

namespace hslab {

/// psi_s^t: exact event-driven hard-sphere flow for a signed duration.
/// Negative durations run the dynamics backward (flip, flow, flip).
inline FlowResult flow(const Configuration& config, double duration,
                       const FlowOptions& opt = {}) {
  if (!std::isfinite(duration)) throw InvalidArgument("flow duration must be finite");
  if (opt.validate_input) validate(config, opt.tol);
  if (duration == 0.0) return FlowResult{config, {}, 0.0, {}};
  const bool backward = duration < 0.0;
  const double span = std::abs(duration);
  Configuration start = backward ? flip_velocities(config) : config;
  FlowResult res = config.count() <= opt.all_pairs_limit
                       ? detail::flow_forward_all_pairs(std::move(start), span, opt)
                       : detail::flow_forward_cells(std::move(start), span, opt);
  if (backward) {
    res.final = flip_velocities(std::move(res.final));
    for (auto& ev : res.events) {
      ev.time = -ev.time;
      ev.pre = {-ev.pre.first, -ev.pre.second};
      ev.post = {-ev.post.first, -ev.post.second};
    }
    for (auto& snap : res.snapshots) snap = flip_velocities(std::move(snap));
  }
  res.elapsed = duration;
  return res;
}

/// Membership in K_s: the backward flow is free for all positive times.
inline bool backward_free_noncolliding(const Configuration& z) {
  for (std::size_t i = 0; i < z.count(); ++i)
    for (std::size_t j = i + 1; j < z.count(); ++j)
      if (!backward_pair_free(z.x[i], z.v[i], z.x[j], z.v[j], z.diameter)) return false;
  return true;
}

/// CSV rows `time,i,j,omega_1..omega_d` with a header line.
inline void write_events_csv(std::ostream& os, const std::vector<CollisionEvent>& events,
                             int dim) {
  os << "time,i,j";
  for (int k = 1; k <= dim; ++k) os << ",omega_" << k;
  os << '\n';
  for (const auto& ev : events) {
    os << detail::format_double(ev.time) << ',' << ev.i << ',' << ev.j;
    for (int k = 0; k < dim; ++k)
      os << ',' << detail::format_double(ev.omega[static_cast<std::size_t>(k)]);
    os << '\n';
  }
}

}  // namespace hslab
