#pragma once

#include <cstdio>
#include <ostream>

#include "hslab/experiments/pseudo_probes.hpp"
#include "hslab/experiments/report.hpp"

namespace hslab {

struct JacobianCheckParams {
  std::uint64_t seed = 1;
  std::vector<std::size_t> ks{1, 2};
  std::vector<double> tolerances{1e-4, 1e-3};
  std::size_t trajectories = 100;
  std::size_t roots = 2;
  double t = 2.0;
  double epsilon = 0.3;
  int dim = 2;
  /// finite-difference steps disagreeing beyond this mark a near-grazing sample
  double grazing_consistency = 1e-3;
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(JacobianCheckParams, seed, ks, tolerances, trajectories, roots, t,
                                                epsilon, dim, grazing_consistency)

/// |det dZ_{s,s+k}| against eps^{k(d-1)} |b| on random pseudo-trajectories.
/// CSV: k,trial,determinant,target,relative_error,consistency,tolerance,pass
inline CheckOutcome jacobian_check(const JacobianCheckParams& p, std::ostream& csv) {
  if (p.ks.size() != p.tolerances.size()) throw InvalidArgument("jacobian-check: one tolerance per k");
  csv << "k,trial,determinant,target,relative_error,consistency,tolerance,pass\n";
  CheckOutcome out{true, {}};
  char buf[160];
  for (std::size_t a = 0; a < p.ks.size(); ++a) {
    const std::size_t k = p.ks[a];
    const double tol = p.tolerances[a];
    Engine g = make_engine(p.seed, 20 + k);
    std::size_t checked = 0, bad = 0, skipped = 0;
    double worst = 0.0;
    for (std::size_t trial = 0; checked < p.trajectories && trial < 10 * p.trajectories; ++trial) {
      const auto pt = random_pseudo_trajectory(g, p.roots, k, p.t, p.dim, p.epsilon);
      JacobianCheck c;
      try {
        c = jacobian_identity_check(pt);
      } catch (const IllConditioned&) {
        ++skipped;
        continue;
      }
      if (c.fd.consistency > p.grazing_consistency) {
        ++skipped;
        continue;
      }
      const bool ok = c.relative_error <= tol;
      bad += !ok;
      worst = std::max(worst, c.relative_error);
      ++checked;
      csv << k << ',' << trial << ',' << csv_num(c.determinant) << ',' << csv_num(c.target) << ','
          << csv_num(c.relative_error) << ',' << csv_num(c.fd.consistency) << ',' << csv_num(tol) << ',' << ok
          << '\n';
    }
    std::snprintf(buf, sizeof buf, "k=%zu worst %.2e on %zu trajectories (%zu skipped)", k, worst, checked, skipped);
    merge(out, {bad == 0 && checked == p.trajectories, buf});
  }
  return out;
}

}  // namespace hslab
