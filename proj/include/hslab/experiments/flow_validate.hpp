#pragma once

#include <cstdio>
#include <ostream>

#include "hslab/core/flow.hpp"
#include "hslab/experiments/probes.hpp"
#include "hslab/experiments/report.hpp"
#include "hslab/numerics/jacobian.hpp"

namespace hslab {

struct FlowValidateParams {
  std::uint64_t seed = 1;
  std::size_t gas_particles = 600;
  double gas_diameter = 0.1;
  double gas_spread = 1.5;
  double gas_duration = 6.0;
  std::size_t min_collisions = 1000;
  double conservation_tol = 1e-10;
  std::size_t reversal_trials = 200;
  std::size_t reversal_particles = 8;
  double reversal_duration = 1.5;
  std::size_t max_events = 100;
  double reversibility_tol = 1e-8;
  std::size_t jacobian_samples = 20;
  std::size_t jacobian_particles = 3;
  double jacobian_duration = 1.5;
  double jacobian_tol = 1e-4;
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(FlowValidateParams, seed, gas_particles, gas_diameter, gas_spread,
                                                gas_duration, min_collisions, conservation_tol, reversal_trials,
                                                reversal_particles, reversal_duration, max_events,
                                                reversibility_tol, jacobian_samples, jacobian_particles,
                                                jacobian_duration, jacobian_tol)

/// Conservation over one long many-body flow, flip-flow-flip reversibility,
/// and |det| of the finite-difference flow Jacobian.
/// CSV: check,trial,events,error,tolerance,pass
inline CheckOutcome flow_validate(const FlowValidateParams& p, std::ostream& csv) {
  csv << "check,trial,events,error,tolerance,pass\n";
  auto row = [&](const char* check, std::size_t trial, std::size_t events, double err, double tol) {
    const bool ok = err <= tol;
    csv << check << ',' << trial << ',' << events << ',' << csv_num(err) << ',' << csv_num(tol) << ',' << ok
        << '\n';
    return ok;
  };
  CheckOutcome out{true, {}};
  char buf[160];

  {
    Engine g = make_engine(p.seed, 0);
    const auto z = random_cluster(g, p.gas_particles, 2, p.gas_diameter, p.gas_spread, 1.0);
    const auto r = flow(z, p.gas_duration);
    const double e0 = energy(z);
    const double de = std::abs(energy(r.final) - e0) / e0;
    const double dp = norm(momentum(r.final) - momentum(z)) / std::sqrt(2.0 * e0 * static_cast<double>(z.count()));
    bool ok = row("energy", 0, r.events.size(), de, p.conservation_tol);
    ok = row("momentum", 0, r.events.size(), dp, p.conservation_tol) && ok;
    ok = ok && r.events.size() >= p.min_collisions;
    std::snprintf(buf, sizeof buf, "conservation %.2e/%.2e over %zu collisions", de, dp, r.events.size());
    merge(out, {ok, buf});
  }

  {
    Engine g = make_engine(p.seed, 1);
    std::size_t checked = 0, bad = 0;
    double worst = 0.0;
    for (std::size_t trial = 0; trial < p.reversal_trials; ++trial) {
      const auto z = random_cluster(g, p.reversal_particles, 2, 0.25, 0.8, 1.0);
      const auto fwd = flow(z, p.reversal_duration);
      if (fwd.events.size() > p.max_events) continue;
      const auto back = flow(flip_velocities(fwd.final), p.reversal_duration);
      const double err = max_abs_diff(back.final, flip_velocities(z)) / (1.0 + coordinate_norm(z));
      worst = std::max(worst, err);
      bad += !row("reversibility", trial, fwd.events.size(), err, p.reversibility_tol);
      ++checked;
    }
    std::snprintf(buf, sizeof buf, "reversibility worst %.2e on %zu trajectories", worst, checked);
    merge(out, {bad == 0 && 2 * checked >= p.reversal_trials, buf});
  }

  {
    Engine g = make_engine(p.seed, 2);
    std::size_t checked = 0, bad = 0, skipped = 0;
    double worst = 0.0;
    const double eps = 0.4;
    for (std::size_t trial = 0; checked < p.jacobian_samples && trial < 10 * p.jacobian_samples; ++trial) {
      const auto z = random_cluster(g, p.jacobian_particles, 2, eps, 0.5, 1.0);
      const auto base = flow(z, p.jacobian_duration);
      if (base.events.empty()) continue;
      bool stable = true;
      auto map = [&](const std::vector<double>& q) {
        const auto r = flow(unflatten(q, 2, eps), p.jacobian_duration);
        if (r.events.size() != base.events.size()) stable = false;
        return flatten(r.final);
      };
      const auto det = fd_abs_determinant(map, flatten(z), 1e-4, 1e-5);
      // near-grazing: the difference quotient has not converged
      if (!stable || det.consistency > 1e-3) {
        ++skipped;
        continue;
      }
      const double err = std::abs(det.fine - 1.0);
      worst = std::max(worst, err);
      bad += !row("jacobian", trial, base.events.size(), err, p.jacobian_tol);
      ++checked;
    }
    std::snprintf(buf, sizeof buf, "|det-1| worst %.2e on %zu flows (%zu near-grazing skipped)", worst, checked,
                  skipped);
    merge(out, {bad == 0 && checked >= p.jacobian_samples, buf});
  }
  return out;
}

}  // namespace hslab
