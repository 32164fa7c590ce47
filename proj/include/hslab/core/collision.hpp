#pragma once

#include <cmath>
#include <optional>
#include <utility>

#include "hslab/core/errors.hpp"
#include "hslab/core/tolerances.hpp"
#include "hslab/core/vec.hpp"

namespace hslab {

/// Specular reflection: v_i* = v_i + w w.(v_j - v_i), v_j* = v_j - w w.(v_j - v_i).
inline std::pair<Vec, Vec> collide(const Vec& vi, const Vec& vj, const Vec& omega,
                                   const Tolerances& tol = {}) {
  if (std::abs(norm(omega) - 1.0) > tol.unit)
    throw InvalidArgument("collision normal is not a unit vector");
  const double k = dot(omega, vj - vi);
  return {vi + omega * k, vj - omega * k};
}

namespace detail {

/// a*b - c*d with one rounding (Kahan).
inline double diff_of_products(double a, double b, double c, double d) {
  const double w = c * d;
  const double e = std::fma(-c, d, w);
  const double f = std::fma(a, b, -w);
  return f + e;
}

}  // namespace detail

enum class ImpactKind {
  none,     ///< receding, or the paths miss
  hit,      ///< transversal contact at `time` > 0
  graze,    ///< discriminant within tolerance: tangential pass near `time`
  contact,  ///< already touching with approaching velocities
};

struct ImpactQuery {
  ImpactKind kind = ImpactKind::none;
  double time = INFINITY;
};

/// Contact analysis of the quadratic |r + w t|^2 = eps^2 with r = x_j - x_i
/// and w = v_j - v_i. No overlap checking; callers guarantee |r| >~ eps.
inline ImpactQuery impact_query(const Vec& xi, const Vec& vi, const Vec& xj, const Vec& vj,
                                double eps, const Tolerances& tol = {}) {
  const Vec r = xj - xi;
  const Vec w = vj - vi;
  const double b = dot(r, w);
  if (b >= 0.0) return {};
  const double a = norm2(w);
  if (a == 0.0) return {};
  const double c = std::fma(-eps, eps, norm2(r));
  const double disc = detail::diff_of_products(b, b, a, c);
  if (disc < -tol.graze * b * b) return {};
  if (disc <= tol.graze * b * b) return {ImpactKind::graze, -b / a};
  const double t = c / (-b + std::sqrt(disc));
  if (t <= 0.0) return {ImpactKind::contact, 0.0};
  return {ImpactKind::hit, t};
}

/// Smallest t > 0 at which two non-overlapping spheres come into contact
/// while approaching; empty for receding, missing or grazing pairs.
inline std::optional<double> time_of_impact(const Vec& xi, const Vec& vi, const Vec& xj,
                                            const Vec& vj, double eps,
                                            const Tolerances& tol = {}) {
  if (norm(xj - xi) < eps * (1.0 - tol.overlap))
    throw InvalidArgument("time_of_impact: spheres overlap");
  const auto q = impact_query(xi, vi, xj, vj, eps, tol);
  if (q.kind == ImpactKind::hit) return q.time;
  return std::nullopt;
}

/// True iff the free backward paths x_i - v_i tau, x_j - v_j tau stay more
/// than eps apart for every tau > 0.
inline bool backward_pair_free(const Vec& xi, const Vec& vi, const Vec& xj, const Vec& vj,
                               double eps) {
  const Vec r = xi - xj;
  const Vec w = vi - vj;
  const double rw = dot(r, w);
  const double r2 = norm2(r);
  if (rw <= 0.0) return r2 > eps * eps;
  // distance decreases initially (backward in time); minimum at tau* = rw/|w|^2
  const double min2 = r2 - rw * rw / norm2(w);
  return min2 > eps * eps;
}

}  // namespace hslab
