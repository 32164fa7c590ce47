#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <tuple>
#include <ostream>
#include <unordered_map>
#include <vector>

#include "hslab/core/flow.hpp"
#include "hslab/core/collision.hpp"
#include "hslab/core/configuration.hpp"
#include "hslab/ensembles/density.hpp"
#include "hslab/numerics/rng.hpp"
#include "hslab/numerics/stats.hpp"

namespace hslab {

struct DsmcOptions {
  /// The equation solved is (d_t + v.grad_x) f = ell^{-1} Q(f, f).
  double ell = 1.0;
  int dim = 2;
  /// Velocity-only dynamics on a unit-density background; one collision cell.
  bool homogeneous = false;
  double cell_size = 0.5;
  std::uint64_t seed = 1;
  std::size_t min_per_cell = 10;
  /// Reject steps longer than the fastest cell's collision time.
  bool check_dt = true;
};

struct DsmcStats {
  std::size_t candidates = 0;
  std::size_t collisions = 0;
  /// Sum of candidate acceptance probabilities: same mean as `collisions`,
  /// without the accept/reject noise.
  double rate_weight = 0.0;
  std::size_t cells = 0;
  std::size_t underoccupied_cells = 0;
  double max_energy_error = 0.0;    ///< per event, relative
  double max_momentum_error = 0.0;  ///< per event, relative
  double max_rate_dt = 0.0;         ///< largest cell collision rate bound times dt
};

/// Stored particle state at one output time; x_free are the initial particles
/// transported without collisions, the control-variate shadow.
struct KineticOutput {
  double t = 0.0;
  std::vector<Vec> x, v, x_free;
  double bandwidth = 0.0;
  double mass = 0.0;
  Vec momentum;
  double energy = 0.0;
  double max_speed = 0.0;
  std::size_t collisions = 0;
  /// Gaussian envelope sup e^{beta |v|^2 / 2} f, with beta half the inverse
  /// temperature, sampled at the first particles.
  double envelope_beta = 0.0;
  double envelope_constant = 0.0;
};

struct KineticSolution {
  DsmcOptions opt;
  std::optional<DensitySpec> initial;
  double t = 0.0;
  std::vector<Vec> x, v;    ///< simulation particles of mass 1/n each
  std::vector<Vec> x0, v0;  ///< initial sample
  Engine g;
  std::size_t collisions = 0;
  std::size_t underoccupied_warnings = 0;
  std::vector<KineticOutput> outputs;

  std::size_t count() const { return v.size(); }
};

namespace detail {

/// int_{S^{d-1}} [omega.e]_+ d omega.
inline double hs_cross_section(int dim) { return dim == 2 ? 2.0 : std::numbers::pi; }

/// omega with density proportional to [omega.g]_+ on the sphere.
inline Vec scattering_normal(Engine& g, const Vec& rel, int dim) {
  const Vec e = rel * (1.0 / norm(rel));
  if (dim == 2) {
    const double th = std::asin(2.0 * uniform01(g) - 1.0);
    const Vec p{{-e[1], e[0], 0.0}};
    return e * std::cos(th) + p * std::sin(th);
  }
  const double c = std::sqrt(uniform01(g));
  const double sn = std::sqrt(std::max(0.0, 1.0 - c * c));
  const double ph = 2.0 * std::numbers::pi * uniform01(g);
  Vec a = std::abs(e[0]) < 0.9 ? Vec{{1.0, 0.0, 0.0}} : Vec{{0.0, 1.0, 0.0}};
  a -= e * dot(a, e);
  a *= 1.0 / norm(a);
  const Vec b{{e[1] * a[2] - e[2] * a[1], e[2] * a[0] - e[0] * a[2], e[0] * a[1] - e[1] * a[0]}};
  return e * c + (a * std::cos(ph) + b * std::sin(ph)) * sn;
}

inline CellKey cell_of(const Vec& p, double h, int dim) {
  CellKey k;
  for (int a = 0; a < dim; ++a)
    k.k[static_cast<std::size_t>(a)] = static_cast<std::int64_t>(std::floor(p[static_cast<std::size_t>(a)] / h));
  return k;
}

}  // namespace detail

inline KineticSolution make_kinetic_solution(const DensitySpec& spec, std::size_t n, const DsmcOptions& opt) {
  if (n < 2) throw InvalidArgument("need at least two simulation particles");
  KineticSolution sol;
  sol.opt = opt;
  sol.opt.dim = spec.dim;
  sol.initial = spec;
  sol.g = make_engine(opt.seed);
  sol.x.resize(n);
  sol.v.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    Engine gi = make_engine(opt.seed, i + 1);
    std::tie(sol.x[i], sol.v[i]) = sample_particle(spec, gi);
  }
  sol.x0 = sol.x;
  sol.v0 = sol.v;
  return sol;
}

/// Spatially homogeneous solution from an arbitrary velocity sample.
inline KineticSolution make_homogeneous_solution(std::vector<Vec> velocities, DsmcOptions opt) {
  if (velocities.size() < 2) throw InvalidArgument("need at least two simulation particles");
  KineticSolution sol;
  opt.homogeneous = true;
  sol.opt = opt;
  sol.g = make_engine(opt.seed);
  sol.v = std::move(velocities);
  sol.x.assign(sol.v.size(), Vec{});
  sol.x0 = sol.x;
  sol.v0 = sol.v;
  return sol;
}

inline std::vector<Vec> maxwellian_sample(std::size_t n, int dim, double temperature, std::uint64_t seed) {
  std::vector<Vec> v(n);
  Engine g = make_engine(seed);
  for (auto& a : v) a = gaussian_vec(g, dim, std::sqrt(temperature));
  return v;
}

/// One splitting step: free transport, then no-time-counter collisions in
/// each cell with the hard-sphere rate c_d |v_j - v_i| / ell.
inline DsmcStats dsmc_step(KineticSolution& sol, double dt) {
  if (!(dt > 0.0)) throw InvalidArgument("time step must be positive");
  const int d = sol.opt.dim;
  const std::size_t n = sol.count();
  DsmcStats st;
  if (!sol.opt.homogeneous)
    for (std::size_t i = 0; i < n; ++i) sol.x[i] += sol.v[i] * dt;

  std::vector<std::pair<detail::CellKey, std::uint32_t>> order(n);
  for (std::size_t i = 0; i < n; ++i)
    order[i] = {sol.opt.homogeneous ? detail::CellKey{} : detail::cell_of(sol.x[i], sol.opt.cell_size, d),
                static_cast<std::uint32_t>(i)};
  std::sort(order.begin(), order.end());
  const double volume = sol.opt.homogeneous ? 1.0 : std::pow(sol.opt.cell_size, d);
  const double sigma = detail::hs_cross_section(d);

  std::vector<std::uint32_t> members;
  for (std::size_t a = 0; a < n;) {
    std::size_t b = a;
    while (b < n && order[b].first == order[a].first) ++b;
    members.clear();
    for (std::size_t c = a; c < b; ++c) members.push_back(order[c].second);
    a = b;
    ++st.cells;
    const std::size_t nc = members.size();
    if (nc < sol.opt.min_per_cell) ++st.underoccupied_cells;
    if (nc < 2) continue;
    Vec mean;
    for (auto i : members) mean += sol.v[i];
    mean *= 1.0 / static_cast<double>(nc);
    double vmax = 0.0;
    for (auto i : members) vmax = std::max(vmax, norm(sol.v[i] - mean));
    const double gmax = 2.0 * vmax;
    if (gmax == 0.0) continue;
    const double density = static_cast<double>(nc) / (static_cast<double>(n) * volume);
    st.max_rate_dt = std::max(st.max_rate_dt, sigma * density * gmax * dt / sol.opt.ell);
    const double expected = 0.5 * static_cast<double>(nc) * static_cast<double>(nc - 1) * sigma * gmax * dt /
                            (sol.opt.ell * static_cast<double>(n) * volume);
    auto m = static_cast<std::size_t>(expected);
    if (uniform01(sol.g) < expected - static_cast<double>(m)) ++m;
    st.candidates += m;
    for (std::size_t c = 0; c < m; ++c) {
      const auto p = static_cast<std::size_t>(uniform01(sol.g) * static_cast<double>(nc)) % nc;
      auto q = static_cast<std::size_t>(uniform01(sol.g) * static_cast<double>(nc - 1)) % (nc - 1);
      if (q >= p) ++q;
      const std::size_t i = members[p], j = members[q];
      const Vec rel = sol.v[j] - sol.v[i];
      const double gr = norm(rel);
      st.rate_weight += gr / gmax;
      if (uniform01(sol.g) * gmax >= gr || gr == 0.0) continue;
      const Vec omega = detail::scattering_normal(sol.g, rel, d);
      const Vec p0 = sol.v[i] + sol.v[j];
      const double e0 = norm2(sol.v[i]) + norm2(sol.v[j]);
      std::tie(sol.v[i], sol.v[j]) = collide(sol.v[i], sol.v[j], omega, Tolerances{1e-12, 1e-9});
      const double scale = std::max(e0, 1e-300);
      st.max_energy_error = std::max(st.max_energy_error, std::abs(norm2(sol.v[i]) + norm2(sol.v[j]) - e0) / scale);
      st.max_momentum_error =
          std::max(st.max_momentum_error, norm(sol.v[i] + sol.v[j] - p0) / std::sqrt(scale));
      ++st.collisions;
    }
  }
  if (sol.opt.check_dt && st.max_rate_dt > 1.0)
    throw InvalidArgument("time step exceeds the collision time of the densest cell");
  if (st.underoccupied_cells > 0) ++sol.underoccupied_warnings;
  sol.collisions += st.collisions;
  sol.t += dt;
  return st;
}

struct Moments {
  double mass = 0.0;
  Vec momentum;
  double energy = 0.0;
  /// E|v|^4 / (E|v|^2)^2 minus its Maxwellian value (d+2)/d, about the mean.
  double fourth_gap = 0.0;
  double max_speed = 0.0;
};

inline Moments moments(const KineticSolution& sol) {
  const std::size_t n = sol.count();
  const double w = 1.0 / static_cast<double>(n);
  std::vector<double> ones(n, w), e(n), c2(n), c4(n);
  Moments m;
  for (std::size_t i = 0; i < n; ++i) m.momentum += sol.v[i] * w;
  for (std::size_t i = 0; i < n; ++i) {
    e[i] = 0.5 * norm2(sol.v[i]) * w;
    const double r2 = norm2(sol.v[i] - m.momentum);
    c2[i] = r2 * w;
    c4[i] = r2 * r2 * w;
    m.max_speed = std::max(m.max_speed, norm(sol.v[i]));
  }
  m.mass = pairwise_sum(ones);
  m.energy = pairwise_sum(e);
  const double s2 = pairwise_sum(c2);
  const double d = sol.opt.dim;
  m.fourth_gap = pairwise_sum(c4) / (s2 * s2) - (d + 2.0) / d;
  return m;
}

/// Mean collisions per particle per unit time over a step.
inline double collision_frequency(const DsmcStats& st, std::size_t n, double dt) {
  return 2.0 * static_cast<double>(st.collisions) / (static_cast<double>(n) * dt);
}

namespace detail {

/// Gaussian KDE over a point set in R^D with D = d (velocities) or 2d
/// (phase space), bucketed on the first coordinate block.
class PhaseKde {
 public:
  PhaseKde() = default;
  PhaseKde(const std::vector<Vec>* x, const std::vector<Vec>* v, int dim, bool with_x, double reach)
      : x_(x), v_(v), dim_(dim), with_x_(with_x), reach_(reach) {
    const auto& key = with_x ? *x : *v;
    for (std::size_t i = 0; i < key.size(); ++i) grid_[cell_of(key[i], reach_, dim_)].push_back(static_cast<std::uint32_t>(i));
  }

  /// Per-point kernel contributions at (x, v) with width h <= reach / 5, plus
  /// an optional mask of indices to skip.
  template <typename F>
  void visit(const Vec& x, const Vec& v, double h, F&& f) const {
    const Vec& c = with_x_ ? x : v;
    const CellKey k0 = cell_of(c, reach_, dim_);
    const int D = with_x_ ? 2 * dim_ : dim_;
    const double norm_c = std::pow(2.0 * std::numbers::pi * h * h, -0.5 * D);
    CellKey k = k0;
    const int span = 1;
    auto scan = [&] {
      auto it = grid_.find(k);
      if (it == grid_.end()) return;
      for (auto i : it->second) {
        double r2 = norm2((*v_)[i] - v);
        if (with_x_) r2 += norm2((*x_)[i] - x);
        if (r2 < 25.0 * h * h) f(i, norm_c * std::exp(-0.5 * r2 / (h * h)));
      }
    };
    for (int a = -span; a <= span; ++a) {
      k.k[0] = k0.k[0] + a;
      for (int b = (dim_ > 1 ? -span : 0); b <= (dim_ > 1 ? span : 0); ++b) {
        k.k[1] = k0.k[1] + b;
        for (int e = (dim_ > 2 ? -span : 0); e <= (dim_ > 2 ? span : 0); ++e) {
          k.k[2] = k0.k[2] + e;
          scan();
        }
      }
    }
  }

  double reach() const { return reach_; }

 private:
  const std::vector<Vec>* x_ = nullptr;
  const std::vector<Vec>* v_ = nullptr;
  int dim_ = 2;
  bool with_x_ = true;
  double reach_ = 1.0;
  std::unordered_map<CellKey, std::vector<std::uint32_t>, CellKeyHash> grid_;
};

inline double silverman_width(const std::vector<Vec>& x, const std::vector<Vec>& v, int dim, bool with_x) {
  double s2 = 0.0;
  const double n = static_cast<double>(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) s2 += norm2(v[i]) + (with_x ? norm2(x[i]) : 0.0);
  const int D = with_x ? 2 * dim : dim;
  const double sigma = std::sqrt(s2 / (n * D));
  return sigma * std::pow(4.0 / ((D + 2.0) * n), 1.0 / (D + 4.0));
}

/// Leave-half-out likelihood cross-validation over a geometric width grid:
/// even-indexed particles build the estimator, odd-indexed ones score it.
inline double cv_bandwidth(const std::vector<Vec>& x, const std::vector<Vec>& v, int dim, bool with_x) {
  std::vector<Vec> xa, va, xb, vb;
  for (std::size_t i = 0; i < v.size(); ++i) {
    (i % 2 ? xb : xa).push_back(x[i]);
    (i % 2 ? vb : va).push_back(v[i]);
  }
  const double h0 = silverman_width(xa, va, dim, with_x);
  const std::size_t probes = std::min<std::size_t>(vb.size(), 400);
  double best_h = h0, best = -INFINITY;
  for (int j = -4; j <= 2; ++j) {
    const double h = h0 * std::pow(2.0, 0.5 * j);
    const PhaseKde kde(&xa, &va, dim, with_x, 5.0 * h);
    double score = 0.0;
    for (std::size_t p = 0; p < probes; ++p) {
      double acc = 0.0;
      kde.visit(xb[p], vb[p], h, [&](std::uint32_t, double w) { acc += w; });
      score += std::log(acc / static_cast<double>(va.size()) + 1e-300);
    }
    if (score > best) {
      best = score;
      best_h = h;
    }
  }
  return best_h;
}

}  // namespace detail

/// Stores the current state as an output time and fixes its KDE width.
inline void record_output(KineticSolution& sol) {
  KineticOutput out;
  out.t = sol.t;
  out.x = sol.x;
  out.v = sol.v;
  out.x_free.resize(sol.count());
  for (std::size_t i = 0; i < sol.count(); ++i) out.x_free[i] = sol.x0[i] + sol.v0[i] * sol.t;
  const Moments m = moments(sol);
  out.mass = m.mass;
  out.momentum = m.momentum;
  out.energy = m.energy;
  out.max_speed = m.max_speed;
  out.collisions = sol.collisions;
  const bool with_x = !sol.opt.homogeneous;
  out.bandwidth = detail::cv_bandwidth(out.x, out.v, sol.opt.dim, with_x);
  double c2 = 0.0;
  for (const auto& v : out.v) c2 += norm2(v - out.momentum);
  out.envelope_beta = 0.5 * sol.opt.dim * static_cast<double>(sol.count()) / c2;
  const detail::PhaseKde kde(&out.x, &out.v, sol.opt.dim, with_x, 5.0 * out.bandwidth);
  for (std::size_t i = 0; i < std::min<std::size_t>(sol.count(), 200); ++i) {
    double f = 0.0;
    kde.visit(out.x[i], out.v[i], out.bandwidth, [&](std::uint32_t, double k) { f += k; });
    f /= static_cast<double>(sol.count());
    out.envelope_constant =
        std::max(out.envelope_constant, std::exp(0.5 * out.envelope_beta * norm2(out.v[i])) * f);
  }
  sol.outputs.push_back(std::move(out));
}

/// Runs to `t_end` in steps of at most dt, recording each time in `outputs`
/// (which must be increasing and include only times >= sol.t).
inline void dsmc_run(KineticSolution& sol, double dt, const std::vector<double>& output_times) {
  for (double target : output_times) {
    if (target < sol.t - 1e-12) throw InvalidArgument("output times must be increasing");
    while (sol.t < target - 1e-12) dsmc_step(sol, std::min(dt, target - sol.t));
    sol.t = target;
    record_output(sol);
  }
}

struct FValue {
  double value = 0.0;
  double raw = 0.0;  ///< before clipping at zero
  double bias = 0.0;  ///< Richardson estimate from widths h and h/2
  double stderr_ = 0.0;
  double bandwidth = 0.0;
};

struct EvaluateOptions {
  /// Subtract the kernel estimate of the freely transported initial sample
  /// and add the exact free-transport density.
  bool control_variate = true;
  double bandwidth = 0.0;  ///< 0 picks the cross-validated width
};

inline const KineticOutput& output_at(const KineticSolution& sol, double t) {
  for (const auto& o : sol.outputs)
    if (std::abs(o.t - t) <= 1e-9 * std::max(1.0, std::abs(t))) return o;
  throw ExtrapolationError("no stored solution at the requested time");
}

/// Mollified f(t, x, v) >= 0. In homogeneous mode x is ignored and the result
/// is the velocity density.
inline FValue evaluate_f(const KineticSolution& sol, double t, const Vec& x, const Vec& v,
                         const EvaluateOptions& eo = {}) {
  const KineticOutput& out = output_at(sol, t);
  const int d = sol.opt.dim;
  const bool with_x = !sol.opt.homogeneous;
  const bool cv = eo.control_variate && with_x && sol.initial.has_value();
  const double h = eo.bandwidth > 0.0 ? eo.bandwidth : out.bandwidth;
  const std::size_t n = out.v.size();
  const double inv_n = 1.0 / static_cast<double>(n);
  const detail::PhaseKde actual(&out.x, &out.v, d, with_x, 5.0 * h);
  const detail::PhaseKde shadow = cv ? detail::PhaseKde(&out.x_free, &sol.v0, d, with_x, 5.0 * h) : detail::PhaseKde();

  auto estimate = [&](double w, std::vector<double>* contrib) {
    std::unordered_map<std::uint32_t, double> c;
    double sum = 0.0;
    actual.visit(x, v, w, [&](std::uint32_t i, double k) {
      sum += k;
      if (contrib) c[i] += k;
    });
    if (cv) {
      shadow.visit(x, v, w, [&](std::uint32_t i, double k) {
        sum -= k;
        if (contrib) c[i] -= k;
      });
    }
    if (contrib)
      for (const auto& [i, k] : c) contrib->push_back(k);
    double base = cv ? density(*sol.initial, x - v * t, v) : 0.0;
    return base + sum * inv_n;
  };
  std::vector<double> contrib;
  FValue r;
  r.bandwidth = h;
  r.raw = estimate(h, &contrib);
  const double fine = estimate(0.5 * h, nullptr);
  r.bias = 4.0 / 3.0 * (r.raw - fine);
  double s1 = 0.0, s2 = 0.0;
  for (double c : contrib) {
    s1 += c;
    s2 += c * c;
  }
  const double mean = s1 * inv_n;
  r.stderr_ = std::sqrt(std::max(0.0, s2 * inv_n - mean * mean) * inv_n);
  r.value = std::max(0.0, r.raw);
  return r;
}

/// f^{(x)s}(t, Z_s) = prod_i f(t, z_i).
inline double tensor_power(const KineticSolution& sol, double t, const Configuration& z,
                           const EvaluateOptions& eo = {}) {
  double p = 1.0;
  for (std::size_t i = 0; i < z.count(); ++i) p *= evaluate_f(sol, t, z.x[i], z.v[i], eo).value;
  return p;
}

/// Columnar snapshot in the configuration text format.
inline void write_snapshot(std::ostream& os, const KineticOutput& out, int dim) {
  write_configuration(os, Configuration(dim, 1e-300, out.x, out.v));
}

}  // namespace hslab
