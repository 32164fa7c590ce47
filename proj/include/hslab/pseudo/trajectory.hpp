#pragma once

#include <cmath>
#include <cstddef>
#include <ostream>
#include <string>
#include <vector>

#include "hslab/core/collision.hpp"
#include "hslab/core/flow.hpp"
#include "hslab/numerics/jacobian.hpp"

namespace hslab {

/// One particle creation: at `time` a particle with velocity `velocity` is
/// adjoined at x_parent + eps * omega.
struct CreationRecord {
  double time = 0.0;
  Vec velocity;
  Vec omega;
  std::size_t parent = 0;

  friend bool operator==(const CreationRecord&, const CreationRecord&) = default;
};

/// Signed factor of the iterated collision kernel. `gain` marks the C+ branch,
/// where the collisional change of variables was applied at creation; the
/// factor is then +[omega.(v_new - v_parent)]_+, otherwise -[...]_-.
struct KernelFactor {
  double value = 0.0;
  bool gain = false;
};

enum class PseudoStatus { ok, overlap_rejected };

struct PseudoTrajectory {
  Configuration root;
  double horizon = 0.0;
  std::vector<CreationRecord> records;
  /// State right after each creation, then the endpoint at time 0.
  std::vector<Configuration> segments;
  std::vector<KernelFactor> kernel;
  PseudoStatus status = PseudoStatus::ok;
  /// Dynamical collisions seen in the backward segments.
  std::size_t recollisions = 0;

  bool ok() const { return status == PseudoStatus::ok; }
  bool recollision_free() const { return recollisions == 0; }
  const Configuration& endpoint() const { return segments.back(); }

  /// b_{s,s+k}: product of the signed factors; 1 for no creations.
  double kernel_product() const {
    double b = 1.0;
    for (const auto& f : kernel) b *= f.value;
    return b;
  }
};

namespace detail {

inline void check_records(const Configuration& root, double t,
                          const std::vector<CreationRecord>& records, const Tolerances& tol) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw InvalidArgument("horizon must be finite and >= 0");
  double prev = t;
  for (std::size_t j = 0; j < records.size(); ++j) {
    const auto& r = records[j];
    if (!(r.time > 0.0) || r.time > prev)
      throw InvalidArgument("creation times must decrease within (0, t]");
    prev = r.time;
    if (std::abs(norm(r.omega) - 1.0) > tol.unit) throw InvalidArgument("impact parameter is not a unit vector");
    if (r.parent >= root.count() + j) throw InvalidArgument("parent index out of range");
    for (std::size_t k = 0; k < 3; ++k) {
      if (!std::isfinite(r.velocity[k]) || !std::isfinite(r.omega[k]))
        throw InvalidArgument("non-finite creation record");
      if (static_cast<int>(k) >= root.dim && (r.velocity[k] != 0.0 || r.omega[k] != 0.0))
        throw InvalidArgument("creation record beyond the configured dimension");
    }
  }
}

inline std::size_t backward(Configuration& z, double duration, const Tolerances& tol) {
  FlowOptions opt;
  opt.tol = tol;
  FlowResult r = flow(z, -duration, opt);
  z = std::move(r.final);
  return r.events.size();
}

}  // namespace detail

/// Z_{s,s+k}[root, t; records] and its kernel. Flows backward between
/// creations; the new particle gets the collisional change of variables when
/// omega.(v_new - v_parent) > 0.
inline PseudoTrajectory build(const Configuration& root, double t,
                              const std::vector<CreationRecord>& records, const Tolerances& tol = {}) {
  validate(root, tol);
  detail::check_records(root, t, records, tol);
  PseudoTrajectory pt;
  pt.root = root;
  pt.horizon = t;
  pt.records = records;
  Configuration z = root;
  double now = t;
  for (const auto& r : records) {
    pt.recollisions += detail::backward(z, now - r.time, tol);
    now = r.time;
    const Vec xp = z.x[r.parent];
    // x_parent + eps omega rounds at the scale of |x|, which for small eps can
    // fall inside the contact distance; step outward until it does not
    double reach = z.diameter;
    Vec xn = xp + reach * r.omega;
    for (int it = 0; it < 64 && norm(xn - xp) < z.diameter; ++it) {
      reach += std::ldexp(z.diameter, it - 52);
      xn = xp + reach * r.omega;
    }
    const double limit = z.diameter * (1.0 - tol.overlap);
    for (std::size_t i = 0; i < z.count(); ++i) {
      if (i != r.parent && norm(z.x[i] - xn) < limit) {
        pt.status = PseudoStatus::overlap_rejected;
        return pt;
      }
    }
    const Vec vp = z.v[r.parent];
    const double a = dot(r.omega, r.velocity - vp);
    if (std::abs(a) <= tol.graze * norm(r.velocity - vp))
      throw DegenerateConfiguration("grazing creation");
    KernelFactor f{a, a > 0.0};
    if (f.gain) {
      const auto [vi, vn] = collide(vp, r.velocity, r.omega, tol);
      z.v[r.parent] = vi;
      z.push_back(xn, vn);
    } else {
      z.push_back(xn, r.velocity);
    }
    pt.kernel.push_back(f);
    pt.segments.push_back(z);
  }
  pt.recollisions += detail::backward(z, now, tol);
  pt.segments.push_back(std::move(z));
  return pt;
}

/// Structured text dump: header, root, creation records, segments.
inline void write_trajectory(std::ostream& os, const PseudoTrajectory& pt) {
  using detail::format_double;
  os << "pseudo_trajectory status " << (pt.ok() ? "ok" : "overlap_rejected") << " horizon "
     << format_double(pt.horizon) << " creations " << pt.records.size() << " recollisions "
     << pt.recollisions << '\n';
  os << "root\n";
  write_configuration(os, pt.root);
  for (std::size_t j = 0; j < pt.records.size(); ++j) {
    const auto& r = pt.records[j];
    os << "record " << j + 1 << " time " << format_double(r.time) << " parent " << r.parent << " velocity";
    for (int k = 0; k < pt.root.dim; ++k) os << ' ' << format_double(r.velocity[static_cast<std::size_t>(k)]);
    os << " omega";
    for (int k = 0; k < pt.root.dim; ++k) os << ' ' << format_double(r.omega[static_cast<std::size_t>(k)]);
    if (j < pt.kernel.size())
      os << " branch " << (pt.kernel[j].gain ? '+' : '-') << " factor " << format_double(pt.kernel[j].value);
    os << '\n';
  }
  for (std::size_t j = 0; j < pt.segments.size(); ++j) {
    os << "segment " << j + 1 << '\n';
    write_configuration(os, pt.segments[j]);
  }
}

namespace detail {

/// Orthonormal basis of the tangent plane of S^{d-1} at omega.
inline std::vector<Vec> tangent_basis(const Vec& w, int dim) {
  if (dim == 2) return {Vec{{-w[1], w[0], 0.0}}};
  Vec a = std::abs(w[0]) < 0.9 ? Vec{{1.0, 0.0, 0.0}} : Vec{{0.0, 1.0, 0.0}};
  a -= w * dot(a, w);
  a *= 1.0 / norm(a);
  const Vec b{{w[1] * a[2] - w[2] * a[1], w[2] * a[0] - w[0] * a[2], w[0] * a[1] - w[1] * a[0]}};
  return {a, b};
}

}  // namespace detail

struct JacobianCheck {
  double relative_error = 0.0;
  double determinant = 0.0;
  double target = 0.0;
  DeterminantEstimate fd;
};

/// Compares |det d Z_{s,s+k} / d(Z_s, t_j, v_j, omega_j)| with
/// eps^{k(d-1)} |b|, omega in tangent coordinates.
inline JacobianCheck jacobian_identity_check(const PseudoTrajectory& pt, double h1 = 1e-4,
                                             double h2 = 1e-5, const Tolerances& tol = {}) {
  if (!pt.ok()) throw InvalidArgument("jacobian check needs a well-defined pseudo-trajectory");
  const int d = pt.root.dim;
  const auto du = static_cast<std::size_t>(d);
  const std::size_t k = pt.records.size();
  const double margin = tol.graze * 1e3;
  double prev = pt.horizon;
  for (std::size_t j = 0; j < k; ++j) {
    const auto& r = pt.records[j];
    if (prev - r.time < 10 * h1 || r.time < 10 * h1)
      throw IllConditioned("creation times closer than the difference step");
    prev = r.time;
    if (std::abs(pt.kernel[j].value) <= margin) throw IllConditioned("near-grazing creation");
  }
  std::vector<std::vector<Vec>> basis;
  for (const auto& r : pt.records) basis.push_back(detail::tangent_basis(r.omega, d));

  std::vector<double> p = flatten(pt.root);
  const std::size_t nroot = p.size();
  for (const auto& r : pt.records) p.push_back(r.time);
  for (const auto& r : pt.records)
    for (std::size_t c = 0; c < du; ++c) p.push_back(r.velocity[c]);
  for (std::size_t j = 0; j < k; ++j)
    for (std::size_t c = 0; c + 1 < du; ++c) p.push_back(0.0);

  auto map = [&](const std::vector<double>& q) {
    const Configuration root = unflatten(std::span(q).first(nroot), d, pt.root.diameter);
    std::vector<CreationRecord> recs = pt.records;
    std::size_t at = nroot;
    for (std::size_t j = 0; j < k; ++j) recs[j].time = q[at++];
    for (std::size_t j = 0; j < k; ++j)
      for (std::size_t c = 0; c < du; ++c) recs[j].velocity[c] = q[at++];
    for (std::size_t j = 0; j < k; ++j) {
      Vec w = pt.records[j].omega;
      for (std::size_t c = 0; c + 1 < du; ++c) w += basis[j][c] * q[at++];
      recs[j].omega = w * (1.0 / norm(w));
    }
    PseudoTrajectory moved;
    try {
      moved = build(root, pt.horizon, recs, tol);
    } catch (const DegenerateConfiguration&) {
      throw IllConditioned("perturbation crosses a degenerate configuration");
    }
    if (!moved.ok() || moved.recollisions != pt.recollisions)
      throw IllConditioned("perturbation changes the collision history");
    for (std::size_t j = 0; j < k; ++j)
      if (moved.kernel[j].gain != pt.kernel[j].gain) throw IllConditioned("perturbation flips a creation branch");
    return flatten(moved.endpoint());
  };

  JacobianCheck out;
  out.fd = fd_abs_determinant(map, p, h1, h2);
  out.determinant = out.fd.fine;
  out.target = std::pow(pt.root.diameter, static_cast<double>(k * (du - 1))) * std::abs(pt.kernel_product());
  out.relative_error = std::abs(out.determinant - out.target) / out.target;
  return out;
}

}  // namespace hslab
