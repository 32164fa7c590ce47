#pragma once

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include "hslab/ensembles/density.hpp"
#include "hslab/numerics/parallel.hpp"
#include "hslab/numerics/rng.hpp"
#include "hslab/numerics/stats.hpp"
#include "hslab/pseudo/trajectory.hpp"

namespace hslab {

/// a_{N,k,s} = (N-s)!/(N-s-k)! eps^{k(d-1)}.
inline double duhamel_coefficient(std::size_t N, std::size_t k, std::size_t s, double eps, int dim) {
  if (s + k > N) return 0.0;
  double a = 1.0;
  for (std::size_t m = 0; m < k; ++m) a *= static_cast<double>(N - s - m) * std::pow(eps, dim - 1);
  return a;
}

/// f^{(m)}(0, Z_m) for any m; returns 0 outside D_m by convention.
using LevelDensity = std::function<double(const Configuration&)>;

/// prod_i f(z_i) 1_{D_m}(Z_m); without the exclusion factor when `exclusion`
/// is false (point particles).
inline LevelDensity tensorized(const DensitySpec& spec, bool exclusion = true) {
  return [spec, exclusion](const Configuration& z) {
    if (exclusion && !in_phase_space(z)) return 0.0;
    double p = 1.0;
    for (std::size_t i = 0; i < z.count(); ++i) p *= density(spec, z.x[i], z.v[i]);
    return p;
  };
}

struct DuhamelOptions {
  std::size_t depth = 1;
  std::size_t samples = 20000;
  std::uint64_t seed = 1;
  /// Gaussian velocity proposal; `v_radius` > 0 truncates it to that ball.
  Vec v_mean{};
  double v_sigma = 1.0;
  double v_radius = 0.0;
  /// Drop pseudo-trajectories with recollisions (bad-set surrogate).
  bool exclude_recollisions = false;
  unsigned jobs = 1;
};

struct DuhamelValue {
  double value = 0.0;
  double stderr_ = 0.0;
  /// Term k of the truncated series.
  std::vector<Estimate> terms;
  std::size_t overlap_rejected = 0;
  std::size_t recollision_excluded = 0;
};

namespace detail {

/// Draw from the (possibly truncated) Gaussian proposal; returns log density.
inline double draw_velocity(Engine& g, int dim, const Vec& mean, double sigma, double radius, Vec& v) {
  for (;;) {
    v = gaussian_vec(g, dim, sigma, mean);
    if (radius <= 0.0 || norm(v - mean) <= radius) break;
  }
  double lq = -0.5 * norm2(v - mean) / (sigma * sigma) - 0.5 * dim * std::log(2.0 * std::numbers::pi * sigma * sigma);
  if (radius > 0.0)
    lq -= std::log(boost::math::gamma_p(0.5 * dim, 0.5 * radius * radius / (sigma * sigma)));
  return lq;
}

/// Creation times uniform on {0 < t_k < ... < t_1 < t} by sorting uniforms.
inline std::vector<double> simplex_times(Engine& g, std::size_t k, double t) {
  std::vector<double> u(k);
  for (auto& a : u) a = t * uniform01(g);
  std::sort(u.begin(), u.end(), std::greater<>());
  return u;
}

inline double log_factorial(std::size_t n) { return std::lgamma(static_cast<double>(n) + 1.0); }

/// k creation records for an s-particle root: times on the simplex, uniform
/// parents, proposal velocities, uniform impact parameters. Returns the log
/// proposal density of the velocities.
inline double draw_creations(Engine& g, std::size_t s, std::size_t k, double t, int dim, const Vec& v_mean,
                             double v_sigma, double v_radius, std::vector<CreationRecord>& recs) {
  const auto times = simplex_times(g, k, t);
  recs.assign(k, {});
  double log_q = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    recs[j].time = times[j];
    recs[j].parent = static_cast<std::size_t>(uniform01(g) * static_cast<double>(s + j)) % (s + j);
    log_q += draw_velocity(g, dim, v_mean, v_sigma, v_radius, recs[j].velocity);
    recs[j].omega = uniform_sphere(g, dim);
  }
  return log_q;
}

/// log of (t^k / k!) prod_{j=1}^k (s+j-1) |S^{d-1}|^k, the parameter volume
/// that uniform times, parents and impact parameters are drawn from.
inline double log_creation_volume(std::size_t s, std::size_t k, double t, int dim) {
  double v = static_cast<double>(k) * (std::log(t) + std::log(sphere_area(dim))) - log_factorial(k);
  for (std::size_t j = 1; j <= k; ++j) v += std::log(static_cast<double>(s + j - 1));
  return v;
}

}  // namespace detail

/// Truncated Duhamel series for f_N^{(s)}(t, Z_s), s = z.count(), from data at
/// time 0. Term 0 is exact; terms 1..depth are Monte Carlo over the
/// pseudo-trajectory parameters with the signed kernel as weight.
inline DuhamelValue duhamel_point_value(std::size_t N, double t, const Configuration& z,
                                        const LevelDensity& data, const DuhamelOptions& opt) {
  validate(z);
  const std::size_t s = z.count();
  if (N < s) throw InvalidArgument("N must be at least s");
  const int d = z.dim;
  DuhamelValue out;
  const double free_term = data(flow(z, -t).final);
  out.terms.push_back({free_term, 0.0, 1});
  out.value = free_term;
  double var = 0.0;
  const std::size_t depth = std::min(opt.depth, N - s);
  for (std::size_t k = 1; k <= depth; ++k) {
    const double pre =
        std::exp(std::log(duhamel_coefficient(N, k, s, z.diameter, d)) + detail::log_creation_volume(s, k, t, d));
    std::vector<double> w(opt.samples, 0.0);
    std::vector<char> rejected(opt.samples, 0), excluded(opt.samples, 0);
    parallel_for(opt.samples, opt.jobs, [&](std::size_t n) {
      Engine g = make_engine(stream_seed(opt.seed, k), n);
      for (;;) {
        std::vector<CreationRecord> recs;
        const double log_q =
            detail::draw_creations(g, s, k, t, d, opt.v_mean, opt.v_sigma, opt.v_radius, recs);
        try {
          const PseudoTrajectory pt = build(z, t, recs);
          if (!pt.ok()) {
            rejected[n] = 1;
            return;
          }
          if (opt.exclude_recollisions && !pt.recollision_free()) {
            excluded[n] = 1;
            return;
          }
          w[n] = pre * pt.kernel_product() * data(pt.endpoint()) * std::exp(-log_q);
          return;
        } catch (const DegenerateConfiguration&) {
          continue;
        }
      }
    });
    const Estimate e = mean_estimate(w);
    out.terms.push_back(e);
    out.value += e.value;
    var += e.stderr_ * e.stderr_;
    for (std::size_t n = 0; n < opt.samples; ++n) {
      out.overlap_rejected += rejected[n];
      out.recollision_excluded += excluded[n];
    }
  }
  out.stderr_ = std::sqrt(var);
  return out;
}

}  // namespace hslab
