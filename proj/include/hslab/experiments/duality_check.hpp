#pragma once

#include <cstdio>
#include <ostream>

#include "hslab/chaos/duality.hpp"
#include "hslab/experiments/report.hpp"

namespace hslab {

struct DualityCheckParams {
  std::uint64_t seed = 1;
  std::vector<std::size_t> Ns{2, 3, 4};
  std::size_t cells = 20;
  std::size_t runs = 4000;
  double t_min = 0.2;
  double t_max = 1.0;
  double sigmas = 3.0;
  double pass_fraction = 0.95;
  unsigned jobs = 1;
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(DualityCheckParams, seed, Ns, cells, runs, t_min, t_max, sigmas,
                                                pass_fraction, jobs)

struct DualityCell {
  BracketSpec bracket;
  double t = 0.0;
  bool pair_level = false;
};

/// A random (Phi, F, t) cell: a half-space indicator at level 1, sometimes a
/// proximity indicator at level 2, Gaussian data with random centres and
/// widths.
inline DualityCell random_duality_cell(std::size_t N, std::uint64_t seed, const DualityCheckParams& p) {
  Engine g = make_engine(seed);
  DualityCell c;
  auto& b = c.bracket;
  b.observable.N = N;
  b.observable.level_cap = N;
  const Vec a = uniform_sphere(g, 2), w = uniform_sphere(g, 2);
  const double cut = 0.5 * standard_normal(g);
  b.observable.levels.emplace(1, LevelFunction::indicator([a, w, cut](const Configuration& z) {
    return dot(a, z.x[0]) + dot(w, z.v[0]) > cut;
  }));
  c.pair_level = N >= 2 && uniform01(g) < 0.5;
  if (c.pair_level) {
    const double r = 0.5 + uniform01(g);
    b.observable.levels.emplace(
        2, LevelFunction::indicator([r](const Configuration& z) { return norm(z.x[0] - z.x[1]) < r; }));
  }
  const Vec xc = gaussian_vec(g, 2, 0.3), vc = gaussian_vec(g, 2, 0.5);
  b.data = DensitySpec::gaussian(2, 0.3 + 0.5 * uniform01(g), 0.6 + 0.6 * uniform01(g), xc, vc);
  b.ell = 0.5 + 1.5 * uniform01(g);
  b.runs = p.runs;
  b.seed = stream_seed(seed, 1);
  b.jobs = p.jobs;
  c.t = p.t_min + (p.t_max - p.t_min) * uniform01(g);
  return c;
}

/// <Phi_N(t), F_N(0)> = <Phi_N(0), F_N(t)> on random cells.
/// CSV: N,cell,t,ell,pair_level,lhs,rhs,residual,stderr,degenerate,pass
inline CheckOutcome duality_check(const DualityCheckParams& p, std::ostream& csv) {
  csv << "N,cell,t,ell,pair_level,lhs,rhs,residual,stderr,degenerate,pass\n";
  CheckOutcome out{true, {}};
  char buf[120];
  for (auto N : p.Ns) {
    std::size_t good = 0;
    for (std::size_t c = 0; c < p.cells; ++c) {
      const DualityCell cell = random_duality_cell(N, stream_seed(p.seed, 1000 * N + c), p);
      const DualityResidual r = duality_residual(cell.bracket, cell.t);
      const bool ok = std::abs(r.residual) <= p.sigmas * r.stderr_;
      good += ok;
      csv << N << ',' << c << ',' << csv_num(cell.t) << ',' << csv_num(cell.bracket.ell) << ','
          << cell.pair_level << ',' << csv_num(r.lhs) << ',' << csv_num(r.rhs) << ',' << csv_num(r.residual) << ','
          << csv_num(r.stderr_) << ',' << r.degenerate << ',' << ok << '\n';
    }
    std::snprintf(buf, sizeof buf, "N=%zu %zu/%zu cells within %g stderr", N, good, p.cells, p.sigmas);
    merge(out, {static_cast<double>(good) >= p.pass_fraction * static_cast<double>(p.cells), buf});
  }
  return out;
}

}  // namespace hslab
