#pragma once

#include <cmath>
#include <vector>

#include "hslab/dual/evaluate.hpp"
#include "hslab/ensembles/ensemble.hpp"

namespace hslab {

/// Observable side and data side of the pairing sum_s 1/s! int phi^{(s)} f^{(s)}.
struct BracketSpec {
  ObservableSpec observable;
  DensitySpec data;
  double ell = 1.0;
  std::size_t runs = 4000;
  std::uint64_t seed = 1;
  unsigned jobs = 1;
};

struct DualityResidual {
  double lhs = 0.0;  ///< <Phi_N(t), F_N(0)>
  double rhs = 0.0;  ///< <Phi_N(0), F_N(t)>
  double residual = 0.0;
  double stderr_ = 0.0;
  /// Tuples on which the evolved observable hit a degenerate configuration
  /// (counted as zero).
  std::size_t degenerate = 0;
};

namespace detail {

struct BracketSide {
  Estimate value;
  std::size_t degenerate = 0;
};

/// Per-run sum over levels of tuple averages, then the mean over runs.
inline BracketSide bracket(const EnsembleSample& ens, const ObservableSpec& sp, double obs_time, double data_time,
                           unsigned jobs) {
  const std::size_t top = std::min(ens.N, sp.level_cap);
  std::vector<double> per_run(ens.runs.size(), 0.0);
  std::vector<std::size_t> bad(ens.runs.size(), 0);
  parallel_for(ens.runs.size(), jobs, [&](std::size_t r) {
    const Configuration z = data_time == 0.0 ? ens.runs[r].initial : flow(ens.runs[r].initial, data_time).final;
    double total = 0.0;
    double inv_fact = 1.0;
    for (std::size_t s = 1; s <= top; ++s) {
      inv_fact /= static_cast<double>(s);
      if (s < sp.lowest_level()) continue;
      const TupleTest test = [&](const Configuration& tuple) {
        try {
          return evaluate(sp, obs_time, tuple);
        } catch (const DegenerateConfiguration&) {
          ++bad[r];
          return 0.0;
        }
      };
      total += inv_fact * tuple_average(z, test, s);
    }
    per_run[r] = total;
  });
  BracketSide side{mean_estimate(per_run), 0};
  for (auto b : bad) side.degenerate += b;
  return side;
}

}  // namespace detail

/// <Phi_N(t), F_N(0)> - <Phi_N(0), F_N(t)>. The sides use independent
/// ensembles, except at t = 0 where both are the same expression on one
/// ensemble.
inline DualityResidual duality_residual(const BracketSpec& b, double t) {
  const std::size_t N = b.observable.N;
  if (N < 1) throw InvalidArgument("bracket needs N >= 1");
  const EnsembleSample left = make_ensemble(b.data, N, b.ell, b.runs, stream_seed(b.seed, 0), b.jobs);
  const detail::BracketSide lhs = detail::bracket(left, b.observable, t, 0.0, b.jobs);
  DualityResidual out;
  out.lhs = lhs.value.value;
  out.degenerate = lhs.degenerate;
  if (t == 0.0) {
    out.rhs = out.lhs;
    return out;
  }
  const EnsembleSample right = make_ensemble(b.data, N, b.ell, b.runs, stream_seed(b.seed, 1), b.jobs);
  const detail::BracketSide rhs = detail::bracket(right, b.observable, 0.0, t, b.jobs);
  out.rhs = rhs.value.value;
  out.residual = out.lhs - out.rhs;
  out.stderr_ = std::hypot(lhs.value.stderr_, rhs.value.stderr_);
  return out;
}

}  // namespace hslab
