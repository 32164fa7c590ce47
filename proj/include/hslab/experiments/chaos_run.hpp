#pragma once

#include <cstdio>
#include <ostream>

#include "hslab/chaos/experiment.hpp"
#include "hslab/experiments/report.hpp"

namespace hslab {

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(ChaosConfig, dim, ell, h0, c0, Ns, t_over_TL, times, R, T_prime, depth,
                                                mc_budget, inner_samples, sup_samples, exclude_recollisions, seed,
                                                jobs)

struct ChaosRunParams {
  ChaosConfig config;
  double min_tau = 0.6;
};

inline void to_json(nlohmann::json& j, const ChaosRunParams& p) {
  j = p.config;
  j["min_tau"] = p.min_tau;
}

inline void from_json(const nlohmann::json& j, ChaosRunParams& p) {
  p.config = j.get<ChaosConfig>();
  p.min_tau = j.value("min_tau", p.min_tau);
}

/// Seminorm decrease along N at every time of the grid, with the sup-norm
/// gap kept at h0/2 or more. CSV: chaos rows, sorted by (t, N).
inline CheckOutcome chaos_run(const ChaosRunParams& p, std::ostream& csv, ChaosResult* keep = nullptr) {
  const ChaosResult res = chaos_experiment(p.config);
  write_chaos_header(csv);
  for (const auto& r : res.rows) write_chaos_row(csv, r);
  CheckOutcome out{true, {}};
  char buf[200];
  std::snprintf(buf, sizeof buf, "T_L %.4f (nu %.4f)", res.window.T_L, res.window.nu);
  out.summary = buf;
  for (double t : res.times) {
    const double tau = chaos_decrease_tau(res.rows, t);
    double gap = INFINITY;
    std::size_t inconclusive = 0;
    for (const auto& r : res.rows)
      if (r.t == t) {
        gap = std::min(gap, r.sup_gap);
        inconclusive += r.flag != "ok";
      }
    std::snprintf(buf, sizeof buf, "t=%.4f tau %.3f, min sup gap %.3f (h0/2 = %.3f), %zu inconclusive", t, tau, gap,
                  0.5 * p.config.h0, inconclusive);
    merge(out, {tau >= p.min_tau && gap >= 0.5 * p.config.h0, buf});
  }
  if (keep) *keep = res;
  return out;
}

}  // namespace hslab
