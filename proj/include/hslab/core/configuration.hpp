#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "hslab/core/errors.hpp"
#include "hslab/core/tolerances.hpp"
#include "hslab/core/vec.hpp"

namespace hslab {

/// A point Z_s = (X_s, V_s) of s hard spheres of common diameter in R^d.
struct Configuration {
  int dim = 2;
  double diameter = 0.0;
  std::vector<Vec> x;
  std::vector<Vec> v;

  Configuration() = default;
  Configuration(int d, double eps) : dim(d), diameter(eps) {}
  Configuration(int d, double eps, std::vector<Vec> pos, std::vector<Vec> vel)
      : dim(d), diameter(eps), x(std::move(pos)), v(std::move(vel)) {}

  std::size_t count() const { return x.size(); }

  void push_back(const Vec& xi, const Vec& vi) {
    x.push_back(xi);
    v.push_back(vi);
  }

  friend bool operator==(const Configuration&, const Configuration&) = default;
};

/// Smallest pairwise distance minus the diameter; +inf for s < 2.
inline double min_gap(const Configuration& z) {
  double best = INFINITY;
  for (std::size_t i = 0; i < z.count(); ++i)
    for (std::size_t j = i + 1; j < z.count(); ++j)
      best = std::min(best, norm(z.x[j] - z.x[i]) - z.diameter);
  return best;
}

/// Throws InvalidArgument unless the configuration lies in the closure of D_s.
inline void validate(const Configuration& z, const Tolerances& tol = {}) {
  if (z.dim < 2 || z.dim > 3) throw InvalidArgument("dimension must be 2 or 3");
  if (!(z.diameter > 0.0) || !std::isfinite(z.diameter))
    throw InvalidArgument("diameter must be positive and finite");
  if (z.x.size() != z.v.size())
    throw InvalidArgument("positions and velocities differ in length");
  for (std::size_t i = 0; i < z.count(); ++i) {
    for (std::size_t k = 0; k < 3; ++k) {
      if (!std::isfinite(z.x[i][k]) || !std::isfinite(z.v[i][k]))
        throw InvalidArgument("non-finite coordinate");
      if (static_cast<int>(k) >= z.dim && (z.x[i][k] != 0.0 || z.v[i][k] != 0.0))
        throw InvalidArgument("coordinate beyond the configured dimension");
    }
  }
  const double limit = z.diameter * (1.0 - tol.overlap);
  for (std::size_t i = 0; i < z.count(); ++i)
    for (std::size_t j = i + 1; j < z.count(); ++j)
      if (norm(z.x[j] - z.x[i]) < limit)
        throw InvalidArgument("spheres " + std::to_string(i) + " and " + std::to_string(j) +
                              " overlap");
}

inline bool is_valid(const Configuration& z, const Tolerances& tol = {}) {
  try {
    validate(z, tol);
    return true;
  } catch (const InvalidArgument&) {
    return false;
  }
}

/// Strict interior of D_s: every pair separated by more than the diameter.
inline bool in_phase_space(const Configuration& z) { return z.count() < 2 || min_gap(z) > 0.0; }

inline Configuration flip_velocities(Configuration z) {
  for (auto& vi : z.v) vi = -vi;
  return z;
}

/// Z^{(i)}: the configuration with particle i removed.
inline Configuration without(const Configuration& z, std::size_t i) {
  Configuration r(z.dim, z.diameter);
  r.x.reserve(z.count() - 1);
  r.v.reserve(z.count() - 1);
  for (std::size_t k = 0; k < z.count(); ++k)
    if (k != i) r.push_back(z.x[k], z.v[k]);
  return r;
}

/// (sigma Z)_j = z_{sigma(j)}.
inline Configuration permuted(const Configuration& z, std::span<const std::size_t> sigma) {
  Configuration r(z.dim, z.diameter);
  for (std::size_t j : sigma) r.push_back(z.x[j], z.v[j]);
  return r;
}

inline Configuration subset(const Configuration& z, std::span<const std::size_t> idx) {
  return permuted(z, idx);
}

/// E_s = 1/2 sum |v_i|^2.
inline double energy(const Configuration& z) {
  double e = 0.0;
  for (const auto& vi : z.v) e += norm2(vi);
  return 0.5 * e;
}

/// I_s = 1/2 sum |x_i|^2.
inline double inertia(const Configuration& z) {
  double e = 0.0;
  for (const auto& xi : z.x) e += norm2(xi);
  return 0.5 * e;
}

inline Vec momentum(const Configuration& z) {
  Vec p;
  for (const auto& vi : z.v) p += vi;
  return p;
}

/// Flattened (x_1..x_s, v_1..v_s) coordinates, d per particle.
inline std::vector<double> flatten(const Configuration& z) {
  std::vector<double> out;
  out.reserve(2 * z.count() * static_cast<std::size_t>(z.dim));
  for (const auto& xi : z.x)
    for (int k = 0; k < z.dim; ++k) out.push_back(xi[static_cast<std::size_t>(k)]);
  for (const auto& vi : z.v)
    for (int k = 0; k < z.dim; ++k) out.push_back(vi[static_cast<std::size_t>(k)]);
  return out;
}

inline Configuration unflatten(std::span<const double> flat, int dim, double eps) {
  const std::size_t s = flat.size() / (2 * static_cast<std::size_t>(dim));
  Configuration z(dim, eps);
  const auto d = static_cast<std::size_t>(dim);
  for (std::size_t i = 0; i < s; ++i)
    z.push_back(make_vec(flat.begin() + static_cast<std::ptrdiff_t>(i * d), dim),
                make_vec(flat.begin() + static_cast<std::ptrdiff_t>((s + i) * d), dim));
  return z;
}

namespace detail {
inline std::string format_double(double a) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", a);
  return buf;
}
}  // namespace detail

/// Columnar record: header `d s epsilon`, then one `x_1..x_d v_1..v_d` line
/// per particle, every value printed with round-trip precision.
inline void write_configuration(std::ostream& os, const Configuration& z) {
  os << z.dim << ' ' << z.count() << ' ' << detail::format_double(z.diameter) << '\n';
  for (std::size_t i = 0; i < z.count(); ++i) {
    for (int k = 0; k < z.dim; ++k)
      os << (k ? " " : "") << detail::format_double(z.x[i][static_cast<std::size_t>(k)]);
    for (int k = 0; k < z.dim; ++k)
      os << ' ' << detail::format_double(z.v[i][static_cast<std::size_t>(k)]);
    os << '\n';
  }
}

inline Configuration read_configuration(std::istream& is) {
  int d = 0;
  std::size_t s = 0;
  double eps = 0.0;
  if (!(is >> d >> s >> eps)) throw InvalidArgument("malformed configuration header");
  if (d < 2 || d > 3) throw InvalidArgument("dimension must be 2 or 3");
  Configuration z(d, eps);
  for (std::size_t i = 0; i < s; ++i) {
    Vec xi, vi;
    for (int k = 0; k < d; ++k)
      if (!(is >> xi[static_cast<std::size_t>(k)]))
        throw InvalidArgument("truncated configuration record");
    for (int k = 0; k < d; ++k)
      if (!(is >> vi[static_cast<std::size_t>(k)]))
        throw InvalidArgument("truncated configuration record");
    z.push_back(xi, vi);
  }
  return z;
}

inline std::string to_string(const Configuration& z) {
  std::ostringstream os;
  write_configuration(os, z);
  return os.str();
}

}  // namespace hslab
