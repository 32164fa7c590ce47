#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <unordered_map>
#include <vector>

#include "hslab/core/flow.hpp"
#include "hslab/ensembles/density.hpp"
#include "hslab/numerics/parallel.hpp"
#include "hslab/numerics/rng.hpp"
#include "hslab/numerics/stats.hpp"

namespace hslab {

/// Diameter fixed by the Boltzmann-Grad scaling N eps^{d-1} = 1 / ell.
inline double boltzmann_grad_diameter(std::size_t N, double ell, int dim) {
  if (N == 0 || !(ell > 0.0)) throw InvalidArgument("scaling needs N >= 1 and ell > 0");
  return std::pow(ell * static_cast<double>(N), -1.0 / (dim - 1));
}

/// N eps^{d-1} ell == 1 up to the rounding of the stored double.
inline bool scaling_identity_holds(std::size_t N, double eps, double ell, int dim) {
  const double lhs = static_cast<double>(N) * std::pow(eps, dim - 1) * ell;
  return std::abs(lhs - 1.0) <= 8.0 * std::numeric_limits<double>::epsilon();
}

namespace detail {

/// Incremental hard-core check on a hashed grid of cell size eps.
class ExclusionGrid {
 public:
  ExclusionGrid(int dim, double eps) : dim_(dim), eps_(eps) {}

  void clear() { cells_.clear(); }

  /// Inserts x unless it lies within eps of an earlier point.
  bool try_insert(const Vec& x, std::size_t index, const std::vector<Vec>& pts) {
    std::array<std::int64_t, 3> c{0, 0, 0};
    for (int k = 0; k < dim_; ++k)
      c[static_cast<std::size_t>(k)] =
          static_cast<std::int64_t>(std::floor(x[static_cast<std::size_t>(k)] / eps_));
    const int rz = dim_ == 3 ? 1 : 0;
    for (int a = -1; a <= 1; ++a)
      for (int b = -1; b <= 1; ++b)
        for (int e = -rz; e <= rz; ++e) {
          auto it = cells_.find(key(c[0] + a, c[1] + b, c[2] + e));
          if (it == cells_.end()) continue;
          for (std::size_t j : it->second)
            if (norm(pts[j] - x) < eps_) return false;
        }
    cells_[key(c[0], c[1], c[2])].push_back(index);
    return true;
  }

 private:
  static std::uint64_t key(std::int64_t a, std::int64_t b, std::int64_t c) {
    return splitmix64(static_cast<std::uint64_t>(a)) ^
           splitmix64(static_cast<std::uint64_t>(b) * 0x9e3779b97f4a7c15ULL + 1) ^
           splitmix64(static_cast<std::uint64_t>(c) * 0xc2b2ae3d27d4eb4fULL + 2);
  }

  int dim_;
  double eps_;
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> cells_;
};

/// One rejection trial: draws N particles, stops at the first overlap.
inline bool draw_trial(const DensitySpec& spec, std::size_t N, double eps, Engine& g,
                       ExclusionGrid& grid, Configuration& out) {
  out = Configuration(spec.dim, eps);
  out.x.reserve(N);
  out.v.reserve(N);
  grid.clear();
  for (std::size_t i = 0; i < N; ++i) {
    auto [x, v] = sample_particle(spec, g);
    if (!grid.try_insert(x, i, out.x)) return false;
    out.push_back(x, v);
  }
  return true;
}

}  // namespace detail

struct SamplingOptions {
  /// Trials without any acceptance before giving up; the rate threshold is
  /// one acceptance per window.
  std::uint64_t window = 1'000'000;
};

struct ConditionedSample {
  Configuration config;
  std::uint64_t trials = 0;
};

/// One exact draw of Z_N^{-1} f^{(x)N} 1_{D_N} by rejection.
inline ConditionedSample sample_conditioned_counted(const DensitySpec& spec, std::size_t N,
                                                    double eps, std::uint64_t seed,
                                                    const SamplingOptions& opt = {}) {
  if (N == 0) throw InvalidArgument("N must be positive");
  Engine g(seed);
  detail::ExclusionGrid grid(spec.dim, eps);
  ConditionedSample res;
  for (;;) {
    ++res.trials;
    if (detail::draw_trial(spec, N, eps, g, grid, res.config)) return res;
    if (res.trials >= opt.window)
      throw DensityTooConcentrated("no accepted sample in " + std::to_string(opt.window) +
                                   " trials; the diameter is too large for N");
  }
}

inline Configuration sample_conditioned(const DensitySpec& spec, std::size_t N, double eps,
                                        std::uint64_t seed, const SamplingOptions& opt = {}) {
  return sample_conditioned_counted(spec, N, eps, seed, opt).config;
}

/// Acceptance frequency of the exclusion constraint, i.e. the partition
/// function of the conditioned product, with its binomial standard error.
inline Estimate normalization_estimate(const DensitySpec& spec, std::size_t N, double eps,
                                       std::size_t trials, std::uint64_t seed) {
  Estimate e;
  e.samples = trials;
  if (N <= 1) {
    e.value = 1.0;
    return e;
  }
  Engine g(seed);
  detail::ExclusionGrid grid(spec.dim, eps);
  Configuration scratch;
  std::size_t hits = 0;
  for (std::size_t k = 0; k < trials; ++k)
    if (detail::draw_trial(spec, N, eps, g, grid, scratch)) ++hits;
  const double p = static_cast<double>(hits) / static_cast<double>(trials);
  e.value = p;
  e.stderr_ = std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
  return e;
}

struct EnsembleRun {
  std::uint64_t seed = 0;
  Configuration initial;
};

struct EnsembleSample {
  DensitySpec density;
  std::size_t N = 0;
  double ell = 1.0;
  double epsilon = 0.0;
  std::uint64_t master_seed = 0;
  std::vector<EnsembleRun> runs;
};

/// `runs` independent draws at the scaling-fixed diameter; run r uses
/// stream_seed(master, r).
inline EnsembleSample make_ensemble(const DensitySpec& spec, std::size_t N, double ell,
                                    std::size_t runs, std::uint64_t master_seed,
                                    unsigned jobs = 1) {
  EnsembleSample e;
  e.density = spec;
  e.N = N;
  e.ell = ell;
  e.epsilon = boltzmann_grad_diameter(N, ell, spec.dim);
  e.master_seed = master_seed;
  e.runs.resize(runs);
  parallel_for(runs, jobs, [&](std::size_t r) {
    e.runs[r].seed = stream_seed(master_seed, r);
    e.runs[r].initial = sample_conditioned(spec, N, e.epsilon, e.runs[r].seed);
  });
  return e;
}

/// Same as make_ensemble but with an explicit diameter (scaling ell derived).
inline EnsembleSample make_ensemble_with_diameter(const DensitySpec& spec, std::size_t N,
                                                  double eps, std::size_t runs,
                                                  std::uint64_t master_seed, unsigned jobs = 1) {
  EnsembleSample e;
  e.density = spec;
  e.N = N;
  e.epsilon = eps;
  e.ell = 1.0 / (static_cast<double>(N) * std::pow(eps, spec.dim - 1));
  e.master_seed = master_seed;
  e.runs.resize(runs);
  parallel_for(runs, jobs, [&](std::size_t r) {
    e.runs[r].seed = stream_seed(master_seed, r);
    e.runs[r].initial = sample_conditioned(spec, N, eps, e.runs[r].seed);
  });
  return e;
}

using TupleTest = std::function<double(const Configuration&)>;

struct TupleStatistic {
  std::size_t order = 0;
  double estimate = 0.0;
  double stderr_ = 0.0;
  std::size_t samples = 0;
};

/// (N-s)!/N! times the sum of `test` over ordered distinct s-tuples of z.
inline double tuple_average(const Configuration& z, const TupleTest& test, std::size_t s) {
  const std::size_t N = z.count();
  if (s > N) throw InvalidArgument("tuple order exceeds particle count");
  if (s == 0) {
    return test(Configuration(z.dim, z.diameter));
  }
  std::vector<std::size_t> idx(s);
  std::vector<char> used(N, 0);
  std::vector<double> terms;
  Configuration tuple(z.dim, z.diameter);
  tuple.x.resize(s);
  tuple.v.resize(s);
  auto rec = [&](auto&& self, std::size_t depth) -> void {
    if (depth == s) {
      for (std::size_t a = 0; a < s; ++a) {
        tuple.x[a] = z.x[idx[a]];
        tuple.v[a] = z.v[idx[a]];
      }
      terms.push_back(test(tuple));
      return;
    }
    for (std::size_t i = 0; i < N; ++i) {
      if (used[i]) continue;
      used[i] = 1;
      idx[depth] = i;
      self(self, depth + 1);
      used[i] = 0;
    }
  };
  rec(rec, 0);
  return pairwise_sum(terms) / static_cast<double>(terms.size());
}

/// Weak estimate of f_N^{(s)}(t) against `test`: flows every run to time t
/// and averages the per-run tuple averages.
inline TupleStatistic estimate_tuple_statistic(const EnsembleSample& ens, double t,
                                               const TupleTest& test, std::size_t s,
                                               unsigned jobs = 1) {
  std::vector<double> per_run(ens.runs.size());
  parallel_for(ens.runs.size(), jobs, [&](std::size_t r) {
    const Configuration& z0 = ens.runs[r].initial;
    if (t == 0.0) {
      per_run[r] = tuple_average(z0, test, s);
    } else {
      per_run[r] = tuple_average(flow(z0, t).final, test, s);
    }
  });
  const Estimate e = mean_estimate(per_run);
  return {s, e.value, e.stderr_, e.samples};
}

}  // namespace hslab
