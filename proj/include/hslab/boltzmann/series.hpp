#pragma once

#include <cmath>
#include <vector>

#include "hslab/pseudo/duhamel.hpp"

namespace hslab {

/// Pseudo-trajectory of the Boltzmann hierarchy: point particles, free
/// transport, creations at the parent's position.
struct BoltzmannPseudo {
  Configuration endpoint;
  std::vector<KernelFactor> kernel;

  double kernel_product() const {
    double b = 1.0;
    for (const auto& f : kernel) b *= f.value;
    return b;
  }
};

inline BoltzmannPseudo build_boltzmann(const Configuration& root, double t,
                                       const std::vector<CreationRecord>& records, const Tolerances& tol = {}) {
  detail::check_records(root, t, records, tol);
  Configuration z(root.dim, 0.0, root.x, root.v);
  BoltzmannPseudo bp;
  auto transport = [&z](double dt) {
    for (std::size_t i = 0; i < z.count(); ++i) z.x[i] -= z.v[i] * dt;
  };
  double now = t;
  for (const auto& r : records) {
    transport(now - r.time);
    now = r.time;
    const Vec vp = z.v[r.parent];
    const double a = dot(r.omega, r.velocity - vp);
    if (std::abs(a) <= tol.graze * norm(r.velocity - vp)) throw DegenerateConfiguration("grazing creation");
    KernelFactor f{a, a > 0.0};
    const Vec xn = z.x[r.parent];
    if (f.gain) {
      const auto [vi, vn] = collide(vp, r.velocity, r.omega, tol);
      z.v[r.parent] = vi;
      z.push_back(xn, vn);
    } else {
      z.push_back(xn, r.velocity);
    }
    bp.kernel.push_back(f);
  }
  transport(now);
  bp.endpoint = std::move(z);
  return bp;
}

/// Finite-N and Boltzmann-hierarchy series at the same point with common
/// random numbers, and their difference term by term.
struct PairedDuhamel {
  DuhamelValue finite;
  DuhamelValue limit;
  DuhamelValue difference;
};

namespace detail {

inline double free_transport_value(const Configuration& z, double t, const LevelDensity& data) {
  Configuration y(z.dim, 0.0, z.x, z.v);
  for (std::size_t i = 0; i < y.count(); ++i) y.x[i] -= y.v[i] * t;
  return data(y);
}

}  // namespace detail

/// f^{(s)}(t, Z_s) of the Boltzmann hierarchy with prefactor ell^{-1}, from
/// data f0^{(m)}; same sampling scheme as the finite-N series.
inline DuhamelValue boltzmann_point_value(double ell, double t, const Configuration& z, const LevelDensity& data,
                                          const DuhamelOptions& opt) {
  const std::size_t s = z.count();
  const int d = z.dim;
  DuhamelValue out;
  const double free_term = detail::free_transport_value(z, t, data);
  out.terms.push_back({free_term, 0.0, 1});
  out.value = free_term;
  double var = 0.0;
  for (std::size_t k = 1; k <= opt.depth; ++k) {
    const double pre = std::exp(-static_cast<double>(k) * std::log(ell) + detail::log_creation_volume(s, k, t, d));
    std::vector<double> w(opt.samples, 0.0);
    parallel_for(opt.samples, opt.jobs, [&](std::size_t n) {
      Engine g = make_engine(stream_seed(opt.seed, k), n);
      for (;;) {
        std::vector<CreationRecord> recs;
        const double log_q = detail::draw_creations(g, s, k, t, d, opt.v_mean, opt.v_sigma, opt.v_radius, recs);
        try {
          const BoltzmannPseudo bp = build_boltzmann(z, t, recs);
          w[n] = pre * bp.kernel_product() * data(bp.endpoint) * std::exp(-log_q);
          return;
        } catch (const DegenerateConfiguration&) {
        }
      }
    });
    const Estimate e = mean_estimate(w);
    out.terms.push_back(e);
    out.value += e.value;
    var += e.stderr_ * e.stderr_;
  }
  out.stderr_ = std::sqrt(var);
  return out;
}

/// Both series evaluated on shared creation records. `z` carries the finite-N
/// diameter; with ell = 1/(N eps^{d-1}) the coefficients of the two series
/// agree to O(k/N) and the difference isolates the recollision, overlap and
/// exclusion effects.
inline PairedDuhamel paired_point_values(std::size_t N, double ell, double t, const Configuration& z,
                                         const LevelDensity& data_n, const LevelDensity& data_0,
                                         const DuhamelOptions& opt) {
  validate(z);
  const std::size_t s = z.count();
  if (N < s) throw InvalidArgument("N must be at least s");
  const int d = z.dim;
  PairedDuhamel out;
  const double fn0 = data_n(flow(z, -t).final);
  const double f00 = detail::free_transport_value(z, t, data_0);
  out.finite.terms.push_back({fn0, 0.0, 1});
  out.limit.terms.push_back({f00, 0.0, 1});
  out.difference.terms.push_back({fn0 - f00, 0.0, 1});
  double var[3] = {0.0, 0.0, 0.0};
  const std::size_t depth = std::min(opt.depth, N - s);
  for (std::size_t k = 1; k <= depth; ++k) {
    const double log_vol = detail::log_creation_volume(s, k, t, d);
    const double pre_n = std::exp(std::log(duhamel_coefficient(N, k, s, z.diameter, d)) + log_vol);
    const double pre_0 = std::exp(-static_cast<double>(k) * std::log(ell) + log_vol);
    std::vector<double> wn(opt.samples, 0.0), w0(opt.samples, 0.0), wd(opt.samples, 0.0);
    std::vector<char> rejected(opt.samples, 0), excluded(opt.samples, 0);
    parallel_for(opt.samples, opt.jobs, [&](std::size_t n) {
      Engine g = make_engine(stream_seed(opt.seed, k), n);
      for (;;) {
        std::vector<CreationRecord> recs;
        const double log_q = detail::draw_creations(g, s, k, t, d, opt.v_mean, opt.v_sigma, opt.v_radius, recs);
        try {
          const PseudoTrajectory pt = build(z, t, recs);
          const BoltzmannPseudo bp = build_boltzmann(z, t, recs);
          const double iq = std::exp(-log_q);
          w0[n] = pre_0 * bp.kernel_product() * data_0(bp.endpoint) * iq;
          if (!pt.ok()) {
            rejected[n] = 1;
          } else if (opt.exclude_recollisions && !pt.recollision_free()) {
            excluded[n] = 1;
          } else {
            wn[n] = pre_n * pt.kernel_product() * data_n(pt.endpoint()) * iq;
          }
          wd[n] = wn[n] - w0[n];
          return;
        } catch (const DegenerateConfiguration&) {
        }
      }
    });
    DuhamelValue* parts[3] = {&out.finite, &out.limit, &out.difference};
    const std::vector<double>* ws[3] = {&wn, &w0, &wd};
    for (int p = 0; p < 3; ++p) {
      const Estimate e = mean_estimate(*ws[p]);
      parts[p]->terms.push_back(e);
      var[p] += e.stderr_ * e.stderr_;
    }
    for (std::size_t n = 0; n < opt.samples; ++n) {
      out.finite.overlap_rejected += rejected[n];
      out.finite.recollision_excluded += excluded[n];
    }
  }
  DuhamelValue* parts[3] = {&out.finite, &out.limit, &out.difference};
  for (int p = 0; p < 3; ++p) {
    parts[p]->value = 0.0;
    for (const auto& e : parts[p]->terms) parts[p]->value += e.value;
    parts[p]->stderr_ = std::sqrt(var[p]);
  }
  return out;
}

}  // namespace hslab
