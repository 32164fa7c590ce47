#pragma once

#include <boost/math/distributions/non_central_chi_squared.hpp>

#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <utility>

#include "hslab/core/errors.hpp"
#include "hslab/core/vec.hpp"
#include "hslab/numerics/rng.hpp"

namespace hslab {

enum class DensityKind { gaussian_product, schwartz_reference, example_family };

inline std::string to_string(DensityKind k) {
  switch (k) {
    case DensityKind::gaussian_product: return "gaussian_product";
    case DensityKind::schwartz_reference: return "schwartz_reference";
    case DensityKind::example_family: return "example_family";
  }
  return "?";
}

inline DensityKind density_kind_from_string(const std::string& s) {
  if (s == "gaussian_product") return DensityKind::gaussian_product;
  if (s == "schwartz_reference") return DensityKind::schwartz_reference;
  if (s == "example_family") return DensityKind::example_family;
  throw InvalidArgument("unknown density kind '" + s + "'");
}

/// f(x,v) <= exp(-beta0 (|x|^2 + |v|^2) / 2 - mu0), i.e. the per-particle
/// factor of e^{-beta0 (E_s + I_s)} e^{-mu0 s}.
struct Envelope {
  double beta0 = 1.0;
  double mu0 = 0.0;
};

/// One-particle density on R^d x R^d.
///
/// gaussian_product: independent normals in x and v with the given centres
/// and widths. schwartz_reference: f0 = (2 pi)^{-d} exp(-(|x|^2+|v|^2)/2).
/// example_family: (f0 + h0 1_B) / (1 + h0 |B|) where B is the open ball of
/// radius r centred at r e (e the first phase-space axis), |B| = c0 / log N.
/// The balls are nested in N and all miss the origin.
struct DensitySpec {
  DensityKind kind = DensityKind::schwartz_reference;
  int dim = 2;
  Vec x_center{};
  Vec v_center{};
  double x_sigma = 1.0;
  double v_sigma = 1.0;
  std::size_t N = 0;
  double h0 = 0.25;
  double c0 = 1.0;

  static DensitySpec gaussian(int dim, double x_sigma, double v_sigma, Vec xc = {}, Vec vc = {}) {
    DensitySpec s;
    s.kind = DensityKind::gaussian_product;
    s.dim = dim;
    s.x_sigma = x_sigma;
    s.v_sigma = v_sigma;
    s.x_center = xc;
    s.v_center = vc;
    return s;
  }
  static DensitySpec reference(int dim) {
    DensitySpec s;
    s.kind = DensityKind::schwartz_reference;
    s.dim = dim;
    return s;
  }
};

/// The example family at particle number N (N >= 2).
inline DensitySpec example_family(std::size_t N, int dim = 2, double h0 = 0.25, double c0 = 1.0) {
  if (N < 2) throw InvalidArgument("example family needs N >= 2");
  if (!(h0 > 0.0) || !(c0 > 0.0)) throw InvalidArgument("h0 and c0 must be positive");
  DensitySpec s;
  s.kind = DensityKind::example_family;
  s.dim = dim;
  s.N = N;
  s.h0 = h0;
  s.c0 = c0;
  return s;
}

/// Lebesgue measure of B_N in the 2d-dimensional phase space.
inline double bump_measure(const DensitySpec& s) { return s.c0 / std::log(static_cast<double>(s.N)); }

inline double bump_radius(const DensitySpec& s) {
  return std::pow(bump_measure(s) / unit_ball_volume(2 * s.dim), 1.0 / (2.0 * s.dim));
}

/// Mass h0 |B_N| added before renormalization.
inline double bump_mass(const DensitySpec& s) { return s.h0 * bump_measure(s); }

inline bool in_bump(const DensitySpec& s, const Vec& x, const Vec& v) {
  const double r = bump_radius(s);
  double d2 = 0.0;
  for (int k = 0; k < s.dim; ++k) {
    const auto kk = static_cast<std::size_t>(k);
    const double a = x[kk] - (k == 0 ? r : 0.0);
    d2 += a * a + v[kk] * v[kk];
  }
  return d2 < r * r;
}

inline double reference_density(int dim, const Vec& x, const Vec& v) {
  return std::pow(2.0 * std::numbers::pi, -dim) * std::exp(-0.5 * (norm2(x) + norm2(v)));
}

inline double density(const DensitySpec& s, const Vec& x, const Vec& v) {
  switch (s.kind) {
    case DensityKind::gaussian_product: {
      const double gx = norm2(x - s.x_center) / (s.x_sigma * s.x_sigma);
      const double gv = norm2(v - s.v_center) / (s.v_sigma * s.v_sigma);
      const double c = std::pow(2.0 * std::numbers::pi * s.x_sigma * s.v_sigma, -s.dim);
      return c * std::exp(-0.5 * (gx + gv));
    }
    case DensityKind::schwartz_reference:
      return reference_density(s.dim, x, v);
    case DensityKind::example_family: {
      const double f = reference_density(s.dim, x, v) + (in_bump(s, x, v) ? s.h0 : 0.0);
      return f / (1.0 + bump_mass(s));
    }
  }
  return 0.0;
}

inline std::pair<Vec, Vec> sample_particle(const DensitySpec& s, Engine& g) {
  switch (s.kind) {
    case DensityKind::gaussian_product:
      return {gaussian_vec(g, s.dim, s.x_sigma, s.x_center),
              gaussian_vec(g, s.dim, s.v_sigma, s.v_center)};
    case DensityKind::schwartz_reference:
      return {gaussian_vec(g, s.dim), gaussian_vec(g, s.dim)};
    case DensityKind::example_family: {
      const double m = bump_mass(s);
      if (uniform01(g) * (1.0 + m) >= m) return {gaussian_vec(g, s.dim), gaussian_vec(g, s.dim)};
      // uniform in the 2d-ball: Gaussian direction, radius r U^{1/2d}
      const int n = 2 * s.dim;
      double y[6];
      double len = 0.0;
      for (int k = 0; k < n; ++k) {
        y[k] = standard_normal(g);
        len += y[k] * y[k];
      }
      const double r = bump_radius(s);
      const double scale = r * std::pow(uniform01(g), 1.0 / n) / std::sqrt(len);
      Vec x, v;
      for (int k = 0; k < s.dim; ++k) {
        const auto kk = static_cast<std::size_t>(k);
        x[kk] = y[k] * scale + (k == 0 ? r : 0.0);
        v[kk] = y[k + s.dim] * scale;
      }
      return {x, v};
    }
  }
  return {};
}

/// Constants (beta0, mu0) with f <= exp(-beta0 (|x|^2+|v|^2)/2 - mu0).
inline Envelope envelope(const DensitySpec& s) {
  const double log2pi = std::log(2.0 * std::numbers::pi);
  switch (s.kind) {
    case DensityKind::schwartz_reference:
      return {1.0, s.dim * log2pi};
    case DensityKind::gaussian_product: {
      const double logc = s.dim * (log2pi + std::log(s.x_sigma * s.v_sigma));
      const bool centred = norm2(s.x_center) == 0.0 && norm2(s.v_center) == 0.0;
      if (centred)
        return {1.0 / std::max(s.x_sigma * s.x_sigma, s.v_sigma * s.v_sigma), logc};
      // |a - c|^2 >= |a|^2 / 2 - |c|^2
      const double beta = 0.5 / std::max(s.x_sigma * s.x_sigma, s.v_sigma * s.v_sigma);
      const double shift = norm2(s.x_center) / (s.x_sigma * s.x_sigma) +
                           norm2(s.v_center) / (s.v_sigma * s.v_sigma);
      return {beta, logc - 0.5 * shift};
    }
    case DensityKind::example_family: {
      // the bump sits inside |z| < 2r, where exp(|z|^2/2) < exp(2 r^2)
      const double r = bump_radius(s);
      const double c = std::pow(2.0 * std::numbers::pi, -s.dim) + s.h0 * std::exp(2.0 * r * r);
      return {1.0, -std::log(c / (1.0 + bump_mass(s)))};
    }
  }
  return {};
}

/// Reference mass inside B_N: P(|Y - r e|^2 < r^2) for Y standard normal in
/// R^{2d}, a non-central chi-squared CDF.
inline double reference_mass_in_bump(const DensitySpec& s) {
  const double r = bump_radius(s);
  boost::math::non_central_chi_squared dist(2.0 * s.dim, r * r);
  return boost::math::cdf(dist, r * r);
}

/// Closed form of ||f_{0,N} - f0||_{L^1}: 2 m (1 - F0(B)) / (1 + m).
inline double example_l1_distance(const DensitySpec& s) {
  const double m = bump_mass(s);
  return 2.0 * m * (1.0 - reference_mass_in_bump(s)) / (1.0 + m);
}

/// Lower bound of f_{0,N} - f0 on B_N: (h0 - m (2 pi)^{-d}) / (1 + m).
inline double example_sup_gap_lower_bound(const DensitySpec& s) {
  const double m = bump_mass(s);
  return (s.h0 - m * std::pow(2.0 * std::numbers::pi, -s.dim)) / (1.0 + m);
}

}  // namespace hslab
