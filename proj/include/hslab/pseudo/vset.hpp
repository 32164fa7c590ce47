#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <ostream>
#include <vector>

#include "hslab/dual/evaluate.hpp"
#include "hslab/pseudo/duhamel.hpp"

namespace hslab {

struct VWitness {
  Configuration root;
  double horizon = 0.0;
  std::vector<CreationRecord> records;
};

struct VSearch {
  bool found = false;
  std::optional<VWitness> witness;
  std::size_t nodes = 0;
  bool budget_exhausted = false;
};

namespace detail {

struct VStep {
  double at = 0.0;  ///< absolute forward time of the absorption
  CreationRecord record;
};

/// Forward flow of z over `horizon`; the absorbed particle is always the one
/// with the highest index, removed from the incoming (C-) or outgoing (C+)
/// contact state.
inline bool v_search(const Configuration& z, std::size_t k, double horizon, double offset,
                     std::vector<VStep>& path, std::size_t& nodes, std::size_t budget,
                     Configuration& reached) {
  if (k == 0) {
    reached = z;
    return true;
  }
  if (++nodes > budget) return false;
  const std::size_t top = z.count() - 1;
  const FlowResult r = characteristic(z, horizon, true);
  for (std::size_t e = 0; e < r.events.size(); ++e) {
    const CollisionEvent& ev = r.events[e];
    if (ev.j != top || !(ev.time > 0.0)) continue;
    const Configuration& contact = r.snapshots[e];
    Configuration out = contact;
    out.v[ev.i] = ev.post.first;
    out.v[ev.j] = ev.post.second;
    const std::pair<const Configuration*, Vec> branches[2] = {{&contact, ev.pre.second}, {&out, ev.post.second}};
    for (const auto& [state, vnew] : branches) {
      path.push_back({offset + ev.time, {0.0, vnew, ev.omega, ev.i}});
      if (v_search(without(*state, top), k - 1, horizon - ev.time, offset + ev.time, path, nodes, budget,
                   reached))
        return true;
      path.pop_back();
      if (nodes > budget) return false;
    }
  }
  return false;
}

/// Number of distinct V-witness paths (top-index absorptions only).
inline std::size_t v_count(const Configuration& z, std::size_t k, double horizon) {
  if (k == 0) return 1;
  const std::size_t top = z.count() - 1;
  const FlowResult r = characteristic(z, horizon, true);
  std::size_t n = 0;
  for (std::size_t e = 0; e < r.events.size(); ++e) {
    const CollisionEvent& ev = r.events[e];
    if (ev.j != top || !(ev.time > 0.0)) continue;
    Configuration out = r.snapshots[e];
    out.v[ev.i] = ev.post.first;
    out.v[ev.j] = ev.post.second;
    n += v_count(without(r.snapshots[e], top), k - 1, horizon - ev.time);
    n += v_count(without(out, top), k - 1, horizon - ev.time);
  }
  return n;
}

}  // namespace detail

/// Semi-decision for Z_s in V_s^k(T): a witness (root, horizon, records) with
/// build(root, horizon, records).endpoint() == Z_s, or "not found".
inline VSearch v_set_membership(const Configuration& z, std::size_t k, double T,
                                std::size_t budget = 100000) {
  validate(z);
  if (k >= z.count()) throw InvalidArgument("need 0 <= k < s");
  VSearch res;
  if (k == 0) {
    res.found = true;
    res.witness = VWitness{z, 0.0, {}};
    return res;
  }
  std::vector<detail::VStep> path;
  Configuration reached;
  res.found = detail::v_search(z, k, T, 0.0, path, res.nodes, budget, reached);
  res.budget_exhausted = !res.found && res.nodes > budget;
  if (!res.found) return res;
  // path runs forward in time: path[0] is the last creation t_k
  const double a1 = path.back().at;
  const double horizon = 0.5 * (a1 + T);
  VWitness w;
  w.horizon = horizon;
  w.root = detail::characteristic(reached, horizon - a1, false).final;
  for (auto it = path.rbegin(); it != path.rend(); ++it) {
    CreationRecord rec = it->record;
    rec.time = it->at;
    w.records.push_back(rec);
  }
  res.witness = std::move(w);
  return res;
}

/// Number of witness paths of Z in W_s^k(T): the unit-multiplicity hat
/// coefficient at level s - k.
inline std::size_t w_witness_count(const Configuration& z, std::size_t k, double T) {
  const std::size_t s = z.count();
  const auto c = level_coefficients(hat_spec(s - k, s, s), T, z);
  return c[s - k].convert_to<std::size_t>();
}

inline std::size_t v_witness_count(const Configuration& z, std::size_t k, double T) {
  return detail::v_count(z, k, T);
}

enum class MeasureRoute { parametrized_w, parametrized_v, indicator_w };

struct MeasureOptions {
  std::size_t s = 2;
  std::size_t k = 1;
  double T = 1.0;
  double beta = 1.0;
  double epsilon = 0.1;
  int dim = 2;
  std::size_t samples = 20000;
  std::uint64_t seed = 1;
  MeasureRoute route = MeasureRoute::parametrized_w;
  unsigned jobs = 1;
};

struct MeasureEstimate {
  double estimate = 0.0;
  double stderr_ = 0.0;
  std::size_t samples = 0;
  std::size_t rejected = 0;  ///< overlapping roots or creations
  std::size_t lost = 0;      ///< endpoints whose witness the forward search missed
};

/// int_{W or V} g(Z) dZ through the creation parametrization (area formula):
/// each endpoint carries eps^{k(d-1)} |b| over its witness multiplicity.
/// With `eps_power` false the eps^{k(d-1)} factor is left out, which is the
/// eps^{-k(d-1)}-normalized integral. Roots are free-transport images of
/// Gaussian endpoints with variance 1/beta.
template <typename G>
MeasureEstimate singular_integral(const MeasureOptions& o, G&& integrand, bool eps_power = true) {
  if (o.k == 0 || o.k >= o.s) throw InvalidArgument("need 0 < k < s");
  if (o.route == MeasureRoute::indicator_w) throw InvalidArgument("singular_integral needs a parametrized route");
  const int d = o.dim;
  const double sigma = 1.0 / std::sqrt(o.beta);
  const double log_gauss_mass = 0.5 * d * std::log(2.0 * std::numbers::pi * sigma * sigma);
  const std::size_t r = o.s - o.k;
  double log_pre = detail::log_creation_volume(r, o.k, o.T, d);
  if (eps_power) log_pre += static_cast<double>(o.k * static_cast<std::size_t>(d - 1)) * std::log(o.epsilon);
  if (o.route == MeasureRoute::parametrized_w)
    log_pre += detail::log_factorial(o.s) - detail::log_factorial(r);
  std::vector<double> w(o.samples, 0.0);
  std::vector<char> rejected(o.samples, 0), lost(o.samples, 0);
  parallel_for(o.samples, o.jobs, [&](std::size_t n) {
    Engine g = make_engine(o.seed, n);
    for (;;) {
      Configuration root(d, o.epsilon);
      double log_q = 0.0;
      // root positions are drawn as free-transport images of Gaussian
      // endpoint positions, which keeps w/q bounded
      for (std::size_t i = 0; i < r; ++i) {
        const Vec y = gaussian_vec(g, d, sigma), v = gaussian_vec(g, d, sigma);
        root.push_back(y + v * o.T, v);
        log_q += -0.5 * (norm2(y) + norm2(v)) / (sigma * sigma) - 2.0 * log_gauss_mass;
      }
      std::vector<CreationRecord> recs;
      log_q += detail::draw_creations(g, r, o.k, o.T, d, Vec{}, sigma, 0.0, recs);
      if (!in_phase_space(root)) {
        rejected[n] = 1;
        return;
      }
      try {
        const PseudoTrajectory pt = build(root, o.T, recs);
        if (!pt.ok()) {
          rejected[n] = 1;
          return;
        }
        const Configuration& z = pt.endpoint();
        const std::size_t mult = o.route == MeasureRoute::parametrized_w ? w_witness_count(z, o.k, o.T)
                                                                          : v_witness_count(z, o.k, o.T);
        if (mult == 0) {
          lost[n] = 1;
          return;
        }
        const double gz = integrand(z);
        if (gz != 0.0)
          w[n] = std::exp(log_pre - log_q) * gz * std::abs(pt.kernel_product()) / static_cast<double>(mult);
        return;
      } catch (const DegenerateConfiguration&) {
      }
    }
  });
  const Estimate e = mean_estimate(w);
  MeasureEstimate m{e.value, e.stderr_, e.samples, 0, 0};
  for (std::size_t n = 0; n < o.samples; ++n) {
    m.rejected += rejected[n];
    m.lost += lost[n];
  }
  return m;
}

/// int 1_{W_s^k(T)} (or V) e^{-beta (E_s + I_s)} dZ_s.
///
/// Parametrized routes sample (root, times, velocities, omegas, parents) and
/// weight the endpoint by eps^{k(d-1)} |b| over its witness multiplicity; the
/// W route adds s!/(s-k)! for the relabellings. The indicator route samples
/// Z_s from the weight and tests membership directly.
inline MeasureEstimate singular_measure_estimate(const MeasureOptions& o) {
  if (o.k == 0 || o.k >= o.s) throw InvalidArgument("need 0 < k < s");
  const int d = o.dim;
  const double sigma = 1.0 / std::sqrt(o.beta);
  const double log_gauss_mass = 0.5 * d * std::log(2.0 * std::numbers::pi * sigma * sigma);
  std::vector<double> w(o.samples, 0.0);
  std::vector<char> rejected(o.samples, 0), lost(o.samples, 0);

  if (o.route == MeasureRoute::indicator_w) {
    parallel_for(o.samples, o.jobs, [&](std::size_t n) {
      Engine g = make_engine(o.seed, n);
      for (;;) {
        Configuration z(d, o.epsilon);
        for (std::size_t i = 0; i < o.s; ++i) z.push_back(gaussian_vec(g, d, sigma), gaussian_vec(g, d, sigma));
        if (!in_phase_space(z)) {
          rejected[n] = 1;
          return;
        }
        try {
          w[n] = singular_membership(z, o.k, o.T, o.s) ? 1.0 : 0.0;
          return;
        } catch (const DegenerateConfiguration&) {
        }
      }
    });
    const Estimate e = mean_estimate(w);
    const double scale = std::exp(2.0 * static_cast<double>(o.s) * log_gauss_mass);
    MeasureEstimate m{scale * e.value, scale * e.stderr_, e.samples, 0, 0};
    for (std::size_t n = 0; n < o.samples; ++n) m.rejected += rejected[n];
    return m;
  }

  return singular_integral(o, [&o](const Configuration& z) { return std::exp(-o.beta * (energy(z) + inertia(z))); });
}

/// Measure scan CSV: `s,k,T,epsilon,estimate,stderr`.
inline void write_measure_header(std::ostream& os) { os << "s,k,T,epsilon,estimate,stderr\n"; }

inline void write_measure_row(std::ostream& os, const MeasureOptions& o, const MeasureEstimate& m) {
  using detail::format_double;
  os << o.s << ',' << o.k << ',' << format_double(o.T) << ',' << format_double(o.epsilon) << ','
     << format_double(m.estimate) << ',' << format_double(m.stderr_) << '\n';
}

}  // namespace hslab
