#pragma once

#include <atomic>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>

#include "hslab/pseudo/vset.hpp"

namespace hslab {

/// inf_{i<j} |v_i - v_j| > eta; true for s < 2.
inline bool indicator_U(const Configuration& z, double eta) {
  for (std::size_t i = 0; i < z.count(); ++i)
    for (std::size_t j = i + 1; j < z.count(); ++j)
      if (!(norm(z.v[i] - z.v[j]) > eta)) return false;
  return true;
}

/// Z in K_s: the backward flow is free transport for all times.
inline bool indicator_K(const Configuration& z) { return backward_free_noncolliding(z); }

/// E_s + I_s <= R^2.
inline bool in_energy_ball(const Configuration& z, double R) { return energy(z) + inertia(z) <= R * R; }

struct SeminormSpec {
  double epsilon = 0.1;
  std::size_t s = 1;
  std::size_t k = 0;
  double eta = 0.0;
  double T_prime = 1.0;
  double R = 3.0;
  int dim = 2;

  /// eta = sqrt(eps).
  static SeminormSpec with_default_eta(double eps, std::size_t s, std::size_t k, double T_prime, double R,
                                       int dim = 2) {
    return {eps, s, k, std::sqrt(eps), T_prime, R, dim};
  }
};

inline void validate(const SeminormSpec& sp) {
  if (!(sp.epsilon > 0.0) || sp.s == 0 || sp.k >= sp.s || sp.eta < 0.0 || !(sp.T_prime > 0.0) || !(sp.R > 0.0) ||
      sp.dim < 2 || sp.dim > 3)
    throw InvalidArgument("invalid seminorm parameters");
}

/// Pointwise difference f^{(s)}; may throw on configurations it cannot
/// evaluate.
using DifferenceOracle = std::function<double(const Configuration&)>;

/// Sampler with its log density, for the k = 0 route.
struct Proposal {
  std::function<Configuration(Engine&)> sample;
  std::function<double(const Configuration&)> log_density;
};

struct SeminormOptions {
  std::size_t mc_budget = 20000;
  std::uint64_t seed = 1;
  unsigned jobs = 1;
  /// Gaussian scale of the default proposals; 0 derives it from R.
  double sigma = 0.0;
  std::optional<Proposal> proposal;
};

struct SeminormEstimate {
  double estimate = 0.0;
  double stderr_ = 0.0;
  std::size_t samples = 0;
  std::size_t oracle_failures = 0;
  std::size_t rejected = 0;
  std::size_t lost = 0;
};

namespace detail {

inline double default_sigma(const SeminormSpec& sp, const SeminormOptions& o) {
  if (o.sigma > 0.0) return o.sigma;
  // |Z|^2 = 2R^2 is the mean of the Gaussian proposal's |Z|^2
  return sp.R / std::sqrt(static_cast<double>(sp.s * static_cast<std::size_t>(sp.dim)));
}

inline Proposal gaussian_proposal(const SeminormSpec& sp, double sigma) {
  Proposal p;
  const int d = sp.dim;
  const std::size_t s = sp.s;
  const double eps = sp.epsilon;
  p.sample = [=](Engine& g) {
    Configuration z(d, eps);
    for (std::size_t i = 0; i < s; ++i) z.push_back(gaussian_vec(g, d, sigma), gaussian_vec(g, d, sigma));
    return z;
  };
  p.log_density = [=](const Configuration& z) {
    double n2 = 0.0;
    for (std::size_t i = 0; i < z.count(); ++i) n2 += norm2(z.x[i]) + norm2(z.v[i]);
    return -0.5 * n2 / (sigma * sigma) -
           static_cast<double>(s) * d * std::log(2.0 * std::numbers::pi * sigma * sigma);
  };
  return p;
}

}  // namespace detail

/// eps^{-k(d-1)} || f 1_{K_s} 1_{U^eta} 1_{V_s^k(T')} 1_{E+I <= R^2} ||_{L^1}.
///
/// k = 0: importance sampling over D_s (V_s^0 is everything). k >= 1: the
/// creation parametrization of V_s^k(T'), whose Jacobian eps^{k(d-1)} |b|
/// cancels the prefactor.
inline SeminormEstimate seminorm(const DifferenceOracle& f, const SeminormSpec& sp, const SeminormOptions& o = {}) {
  validate(sp);
  const double sigma = detail::default_sigma(sp, o);
  std::vector<char> failed(o.mc_budget, 0);
  auto restricted = [&](const Configuration& z, std::size_t n) -> double {
    if (!in_energy_ball(z, sp.R) || !indicator_U(z, sp.eta) || !indicator_K(z)) return 0.0;
    try {
      return std::abs(f(z));
    } catch (const std::runtime_error&) {
      failed[n] = 1;
      return 0.0;
    }
  };
  SeminormEstimate out;
  if (sp.k == 0) {
    const Proposal prop = o.proposal ? *o.proposal : detail::gaussian_proposal(sp, sigma);
    std::vector<double> w(o.mc_budget, 0.0);
    std::vector<char> rejected(o.mc_budget, 0);
    parallel_for(o.mc_budget, o.jobs, [&](std::size_t n) {
      Engine g = make_engine(o.seed, n);
      const Configuration z = prop.sample(g);
      if (!in_phase_space(z)) {
        rejected[n] = 1;
        return;
      }
      const double a = restricted(z, n);
      if (a != 0.0) w[n] = a * std::exp(-prop.log_density(z));
    });
    const Estimate e = mean_estimate(w);
    out = {e.value, e.stderr_, e.samples, 0, 0, 0};
    for (char c : rejected) out.rejected += c;
  } else {
    MeasureOptions mo;
    mo.s = sp.s;
    mo.k = sp.k;
    mo.T = sp.T_prime;
    mo.beta = 1.0 / (sigma * sigma);
    mo.epsilon = sp.epsilon;
    mo.dim = sp.dim;
    mo.samples = o.mc_budget;
    mo.seed = o.seed;
    mo.route = MeasureRoute::parametrized_v;
    mo.jobs = o.jobs;
    std::atomic<std::size_t> failures{0};
    const MeasureEstimate m = singular_integral(
        mo,
        [&](const Configuration& z) -> double {
          if (!in_energy_ball(z, sp.R) || !indicator_U(z, sp.eta) || !indicator_K(z)) return 0.0;
          try {
            return std::abs(f(z));
          } catch (const std::runtime_error&) {
            ++failures;
            return 0.0;
          }
        },
        false);
    out = {m.estimate, m.stderr_, m.samples, failures.load(), m.rejected, m.lost};
  }
  for (char c : failed) out.oracle_failures += c;
  if (static_cast<double>(out.oracle_failures) > 0.01 * static_cast<double>(o.mc_budget))
    throw UnreliableOracle("difference oracle failed on more than 1% of probes");
  return out;
}

/// C(s, k, T', R): the seminorm of the constant 1, so that
/// ||f|| <= C sup|f| holds sample by sample under a shared seed.
inline SeminormEstimate seminorm_constant(const SeminormSpec& sp, const SeminormOptions& o = {}) {
  return seminorm([](const Configuration&) { return 1.0; }, sp, o);
}

/// Independent k = 0 check: uniform sampling of the cube [-sqrt2 R, sqrt2 R]^{2sd}
/// that contains the energy ball.
inline SeminormEstimate seminorm_by_rejection(const DifferenceOracle& f, const SeminormSpec& sp,
                                              std::size_t samples, std::uint64_t seed) {
  validate(sp);
  if (sp.k != 0) throw InvalidArgument("rejection cross-check covers k = 0 only");
  const int d = sp.dim;
  const double half = std::sqrt(2.0) * sp.R;
  const double log_volume = static_cast<double>(2 * sp.s * static_cast<std::size_t>(d)) * std::log(2.0 * half);
  std::vector<double> w(samples, 0.0);
  for (std::size_t n = 0; n < samples; ++n) {
    Engine g = make_engine(seed, n);
    Configuration z(d, sp.epsilon);
    for (std::size_t i = 0; i < sp.s; ++i) {
      Vec x, v;
      for (int a = 0; a < d; ++a) x[static_cast<std::size_t>(a)] = half * (2.0 * uniform01(g) - 1.0);
      for (int a = 0; a < d; ++a) v[static_cast<std::size_t>(a)] = half * (2.0 * uniform01(g) - 1.0);
      z.push_back(x, v);
    }
    if (!in_phase_space(z) || !in_energy_ball(z, sp.R) || !indicator_U(z, sp.eta) || !indicator_K(z)) continue;
    w[n] = std::abs(f(z));
  }
  const Estimate e = mean_estimate(w);
  const double vol = std::exp(log_volume);
  return {vol * e.value, vol * e.stderr_, e.samples, 0, 0, 0};
}

}  // namespace hslab
