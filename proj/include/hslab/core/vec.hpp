#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace hslab {

/// Fixed-capacity spatial vector. Only the first `dim` components of a
/// configuration are ever nonzero, so all algebra runs over three slots.
struct Vec {
  std::array<double, 3> c{0.0, 0.0, 0.0};

  constexpr double& operator[](std::size_t i) { return c[i]; }
  constexpr double operator[](std::size_t i) const { return c[i]; }

  constexpr Vec& operator+=(const Vec& o) {
    for (std::size_t i = 0; i < 3; ++i) c[i] += o.c[i];
    return *this;
  }
  constexpr Vec& operator-=(const Vec& o) {
    for (std::size_t i = 0; i < 3; ++i) c[i] -= o.c[i];
    return *this;
  }
  constexpr Vec& operator*=(double a) {
    for (auto& x : c) x *= a;
    return *this;
  }

  friend constexpr Vec operator+(Vec a, const Vec& b) { return a += b; }
  friend constexpr Vec operator-(Vec a, const Vec& b) { return a -= b; }
  friend constexpr Vec operator-(Vec a) { return a *= -1.0; }
  friend constexpr Vec operator*(Vec a, double s) { return a *= s; }
  friend constexpr Vec operator*(double s, Vec a) { return a *= s; }
  friend constexpr bool operator==(const Vec&, const Vec&) = default;
};

constexpr double dot(const Vec& a, const Vec& b) {
  return a.c[0] * b.c[0] + a.c[1] * b.c[1] + a.c[2] * b.c[2];
}

constexpr double norm2(const Vec& a) { return dot(a, a); }

inline double norm(const Vec& a) { return std::sqrt(norm2(a)); }

/// Build a vector from the first `dim` entries of a contiguous range.
template <typename It>
Vec make_vec(It first, int dim) {
  Vec v;
  for (int i = 0; i < dim; ++i, ++first) v[static_cast<std::size_t>(i)] = *first;
  return v;
}

}  // namespace hslab
