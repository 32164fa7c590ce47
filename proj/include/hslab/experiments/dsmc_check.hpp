#pragma once

#include <cstdio>
#include <ostream>

#include "hslab/boltzmann/dsmc.hpp"
#include "hslab/experiments/report.hpp"

namespace hslab {

struct DsmcCheckParams {
  std::uint64_t seed = 1;
  std::size_t particles = 20000;
  std::size_t steps = 1000;
  double dt = 0.01;
  double drift_tol = 1e-3;
  double event_tol = 1e-12;
  /// sampling sd of the kurtosis gap is about sqrt(8 / n) in 2D; allow 5 sd
  double fourth_gap_sds = 5.0;
  std::size_t refine_particles = 20000;
  double refine_cell = 0.4;
  double refine_dt = 0.05;
  double refine_time = 0.3;
  double refine_sigmas = 3.0;
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(DsmcCheckParams, seed, particles, steps, dt, drift_tol, event_tol,
                                                fourth_gap_sds, refine_particles, refine_cell, refine_dt, refine_time,
                                                refine_sigmas)

/// Maxwellian invariance, per-event conservation, and agreement of a run at
/// twice the particles and half the bandwidth within the reported bias.
/// CSV: check,label,value,bound,pass
inline CheckOutcome dsmc_check(const DsmcCheckParams& p, std::ostream& csv) {
  csv << "check,label,value,bound,pass\n";
  auto row = [&](const std::string& check, const std::string& label, double value, double bound) {
    const bool ok = std::abs(value) <= bound;
    csv << check << ',' << label << ',' << csv_num(value) << ',' << csv_num(bound) << ',' << ok << '\n';
    return ok;
  };
  CheckOutcome out{true, {}};
  char buf[200];

  {
    DsmcOptions opt;
    opt.seed = stream_seed(p.seed, 0);
    KineticSolution sol = make_homogeneous_solution(maxwellian_sample(p.particles, 2, 1.0, stream_seed(p.seed, 1)), opt);
    const Moments m0 = moments(sol);
    double max_e = 0.0, max_p = 0.0;
    for (std::size_t k = 0; k < p.steps; ++k) {
      const DsmcStats st = dsmc_step(sol, p.dt);
      max_e = std::max(max_e, st.max_energy_error);
      max_p = std::max(max_p, st.max_momentum_error);
    }
    const Moments m1 = moments(sol);
    const double de = (m1.energy - m0.energy) / m0.energy;
    const double dp = norm(m1.momentum - m0.momentum);
    const double gap_bound = p.fourth_gap_sds * std::sqrt(8.0 / static_cast<double>(p.particles));
    bool ok = row("maxwellian", "mass", m1.mass - m0.mass, p.drift_tol);
    ok = row("maxwellian", "energy", de, p.drift_tol) && ok;
    ok = row("maxwellian", "momentum", dp, p.drift_tol) && ok;
    ok = row("maxwellian", "fourth_gap", m1.fourth_gap, gap_bound) && ok;
    const bool ev = row("events", "energy", max_e, p.event_tol) & row("events", "momentum", max_p, p.event_tol);
    std::snprintf(buf, sizeof buf, "drift energy %.1e momentum %.1e kurtosis gap %.3f over %zu collisions", de, dp,
                  m1.fourth_gap, sol.collisions);
    merge(out, {ok && sol.collisions > 0, buf});
    std::snprintf(buf, sizeof buf, "per-event errors %.1e/%.1e", max_e, max_p);
    merge(out, {ev, buf});
  }

  {
    DsmcOptions opt;
    opt.seed = stream_seed(p.seed, 2);
    opt.cell_size = p.refine_cell;
    KineticSolution coarse = make_kinetic_solution(DensitySpec::reference(2), p.refine_particles, opt);
    opt.seed = stream_seed(p.seed, 3);
    KineticSolution fine = make_kinetic_solution(DensitySpec::reference(2), 2 * p.refine_particles, opt);
    dsmc_run(coarse, p.refine_dt, {0.0, p.refine_time});
    dsmc_run(fine, p.refine_dt, {0.0, p.refine_time});
    const std::vector<std::pair<Vec, Vec>> probes{{Vec{{0.1, 0.0, 0.0}}, Vec{{0.0, 0.2, 0.0}}},
                                                  {Vec{{-0.6, 0.5, 0.0}}, Vec{{0.7, -0.3, 0.0}}}};
    std::size_t bad = 0, n = 0;
    for (double t : {0.0, p.refine_time})
      for (bool cv : {false, true})
        for (std::size_t q = 0; q < probes.size(); ++q) {
          EvaluateOptions a;
          a.control_variate = cv;
          const FValue fa = evaluate_f(coarse, t, probes[q].first, probes[q].second, a);
          EvaluateOptions b = a;
          b.bandwidth = 0.5 * fa.bandwidth;
          const FValue fb = evaluate_f(fine, t, probes[q].first, probes[q].second, b);
          // roundoff floor: at t = 0 the control variate returns the data exactly
          const double bound = 2.0 * std::abs(fa.bias) + p.refine_sigmas * std::hypot(fa.stderr_, fb.stderr_) +
                               1e-12 * std::abs(fa.raw);
          char label[64];
          std::snprintf(label, sizeof label, "t=%g cv=%d probe=%zu", t, static_cast<int>(cv), q);
          bad += !row("refinement", label, fb.raw - fa.raw, bound);
          ++n;
        }
    std::snprintf(buf, sizeof buf, "refinement %zu/%zu probes within bias", n - bad, n);
    merge(out, {bad == 0, buf});
  }
  return out;
}

}  // namespace hslab
