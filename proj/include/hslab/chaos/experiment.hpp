#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <mutex>
#include <numbers>
#include <ostream>
#include <string>
#include <vector>

#include "hslab/boltzmann/dsmc.hpp"
#include "hslab/boltzmann/series.hpp"
#include "hslab/chaos/seminorm.hpp"
#include "hslab/ensembles/ensemble.hpp"

namespace hslab {

/// Short-time window of the hierarchy series, T_L = 0.5 / nu with nu the
/// initial mean collision frequency per particle measured by DSMC. C_d is
/// T_L / (ell e^{mu0} beta0^{(d+1)/2}) for the data's envelope.
struct LanfordWindow {
  double nu = 0.0;
  double T_L = 0.0;
  double C_d = 0.0;
  double mu0 = 0.0;
  double beta0 = 1.0;
  double ell = 1.0;
};

inline LanfordWindow lanford_window(const DensitySpec& data, double ell, std::size_t particles = 200000,
                                    std::uint64_t seed = 1) {
  DsmcOptions opt;
  opt.ell = ell;
  opt.seed = seed;
  opt.cell_size = 0.25;
  opt.check_dt = false;
  KineticSolution sol = make_kinetic_solution(data, particles, opt);
  const double dt = 0.002 * ell;
  double c = 0.0;
  const int steps = 50;
  for (int k = 0; k < steps; ++k) c += dsmc_step(sol, dt).rate_weight;
  LanfordWindow w;
  w.ell = ell;
  w.nu = 2.0 * c / (static_cast<double>(particles) * dt * steps);
  w.T_L = 0.5 / w.nu;
  const Envelope env = envelope(data);
  w.mu0 = env.mu0;
  w.beta0 = env.beta0;
  w.C_d = w.T_L / (ell * std::exp(env.mu0) * std::pow(env.beta0, 0.5 * (data.dim + 1)));
  return w;
}

struct ChaosConfig {
  int dim = 2;
  double ell = 1.0;
  double h0 = 0.25;
  double c0 = 1.0;
  std::vector<std::size_t> Ns{128, 256, 512, 1024, 2048, 4096};
  /// Times as fractions of T_L; `times` overrides with absolute values.
  std::vector<double> t_over_TL{0.0, 0.5};
  std::vector<double> times;
  double R = 3.0;
  double T_prime = 1.0;
  std::size_t depth = 3;
  std::size_t mc_budget = 4000;
  std::size_t inner_samples = 400;
  std::size_t sup_samples = 20000;
  bool exclude_recollisions = true;
  std::uint64_t seed = 1;
  unsigned jobs = 1;
};

struct ChaosRow {
  std::size_t N = 0;
  double epsilon = 0.0;
  double ell = 1.0;
  std::size_t s = 1;
  std::size_t k = 0;
  double eta = 0.0;
  double T_prime = 1.0;
  double R = 3.0;
  double t = 0.0;
  std::size_t n_depth = 0;
  double seminorm = 0.0;
  double stderr_ = 0.0;
  std::string flag = "ok";
  std::uint64_t seed = 0;
  std::size_t mc_budget = 0;
  std::size_t resamples = 0;
  double tail = 0.0;
  double sup_gap = 0.0;
  double sup_gap_stderr = 0.0;
};

namespace detail {

inline std::uint64_t hash_configuration(const Configuration& z, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < z.count(); ++i)
    for (std::size_t a = 0; a < 3; ++a) {
      h = splitmix64(h ^ std::bit_cast<std::uint64_t>(z.x[i][a]));
      h = splitmix64(h ^ std::bit_cast<std::uint64_t>(z.v[i][a]));
    }
  return h;
}

/// Even mixture of the freely transported bump (uniform) and the freely
/// transported reference density.
inline Proposal chaos_proposal(const DensitySpec& family, double t) {
  const int d = family.dim;
  const double r = bump_radius(family);
  const double log_bvol = std::log(bump_measure(family));
  Proposal p;
  p.sample = [=](Engine& g) {
    Vec x, v;
    if (uniform01(g) < 0.5) {
      std::array<double, 6> u{};
      double n2 = 0.0;
      for (int a = 0; a < 2 * d; ++a) {
        u[static_cast<std::size_t>(a)] = standard_normal(g);
        n2 += u[static_cast<std::size_t>(a)] * u[static_cast<std::size_t>(a)];
      }
      const double rad = r * std::pow(uniform01(g), 1.0 / (2.0 * d)) / std::sqrt(n2);
      for (int a = 0; a < d; ++a) {
        x[static_cast<std::size_t>(a)] = rad * u[static_cast<std::size_t>(a)] + (a == 0 ? r : 0.0);
        v[static_cast<std::size_t>(a)] = rad * u[static_cast<std::size_t>(a + d)];
      }
    } else {
      x = gaussian_vec(g, d);
      v = gaussian_vec(g, d);
    }
    Configuration z(d, 1e-300);
    z.push_back(x + v * t, v);
    return z;
  };
  p.log_density = [=](const Configuration& z) {
    const Vec x0 = z.x[0] - z.v[0] * t;
    const double bump = in_bump(family, x0, z.v[0]) ? std::exp(-log_bvol) : 0.0;
    return std::log(0.5 * bump + 0.5 * reference_density(d, x0, z.v[0]));
  };
  return p;
}

}  // namespace detail

/// One row of the chaos table: the seminorm of f_N^{(1)}(t) - f(t) for the
/// example family at particle number N. f_N^{(1)} comes from the finite-N
/// series on f_{0,N}^{(x)m} 1_D data, f from the Boltzmann-hierarchy series on
/// the reference data, both on shared creation records.
inline ChaosRow chaos_cell(const ChaosConfig& cfg, std::size_t N, double t) {
  const DensitySpec family = example_family(N, cfg.dim, cfg.h0, cfg.c0);
  const DensitySpec ref = DensitySpec::reference(cfg.dim);
  const double eps = boltzmann_grad_diameter(N, cfg.ell, cfg.dim);
  ChaosRow row;
  row.N = N;
  row.epsilon = eps;
  row.ell = cfg.ell;
  row.eta = std::sqrt(eps);
  row.T_prime = cfg.T_prime;
  row.R = cfg.R;
  row.t = t;
  row.n_depth = t == 0.0 ? 0 : cfg.depth;
  row.seed = stream_seed(cfg.seed, N);
  row.mc_budget = cfg.mc_budget;

  const auto data_n = tensorized(family);
  const auto data_0 = tensorized(ref, false);
  DuhamelOptions dopt;
  dopt.depth = cfg.depth;
  dopt.samples = cfg.inner_samples;
  dopt.exclude_recollisions = cfg.exclude_recollisions;

  std::mutex mu;
  struct Side {
    std::uint64_t key;
    double tail_w;
    std::size_t resamples;
  };
  std::vector<Side> sides;
  const Proposal prop = detail::chaos_proposal(family, t);
  auto point = [&](const Configuration& z, const DuhamelOptions& o) {
    Configuration zz(cfg.dim, eps, z.x, z.v);
    return paired_point_values(N, cfg.ell, t, zz, data_n, data_0, o);
  };
  const DifferenceOracle oracle = [&](const Configuration& z) -> double {
    if (t == 0.0) return density(family, z.x[0], z.v[0]) - reference_density(cfg.dim, z.x[0], z.v[0]);
    DuhamelOptions o = dopt;
    o.seed = detail::hash_configuration(z, row.seed);
    const PairedDuhamel p = point(z, o);
    const double tail = std::abs(p.difference.terms.back().value) * std::exp(-prop.log_density(z));
    std::lock_guard lock(mu);
    sides.push_back({o.seed, tail, p.finite.overlap_rejected + p.finite.recollision_excluded});
    return p.difference.value;
  };
  SeminormSpec sp{eps, 1, 0, row.eta, cfg.T_prime, cfg.R, cfg.dim};
  SeminormOptions so;
  so.mc_budget = cfg.mc_budget;
  so.seed = row.seed;
  so.jobs = cfg.jobs;
  so.proposal = prop;
  const SeminormEstimate e = seminorm(oracle, sp, so);
  row.seminorm = e.estimate;
  row.stderr_ = e.stderr_;

  std::sort(sides.begin(), sides.end(), [](const Side& a, const Side& b) { return a.key < b.key; });
  std::vector<double> tails;
  for (const auto& s : sides) {
    tails.push_back(s.tail_w);
    row.resamples += s.resamples;
  }
  row.tail = pairwise_sum(tails) / static_cast<double>(cfg.mc_budget);
  if (row.tail > 0.1 * row.seminorm) row.flag = "inconclusive";

  // sup-norm gap at the bump centre, which free transport leaves in place
  Configuration centre(cfg.dim, eps);
  centre.push_back(Vec{{bump_radius(family), 0.0, 0.0}}, Vec{});
  if (t == 0.0) {
    row.sup_gap = std::abs(density(family, centre.x[0], centre.v[0]) - reference_density(cfg.dim, centre.x[0], centre.v[0]));
  } else {
    DuhamelOptions o = dopt;
    o.samples = cfg.sup_samples;
    o.seed = stream_seed(row.seed, 1);
    o.jobs = cfg.jobs;
    const PairedDuhamel p = point(centre, o);
    row.sup_gap = std::abs(p.difference.value);
    row.sup_gap_stderr = p.difference.stderr_;
  }
  return row;
}

struct ChaosResult {
  LanfordWindow window;
  std::vector<double> times;
  std::vector<ChaosRow> rows;  ///< sorted by (t, N)
};

inline ChaosResult chaos_experiment(const ChaosConfig& cfg) {
  if (cfg.Ns.empty()) throw InvalidArgument("empty N grid");
  for (auto N : cfg.Ns)
    if (N < 2) throw InvalidArgument("N must be at least 2");
  ChaosResult res;
  res.window = lanford_window(DensitySpec::reference(cfg.dim), cfg.ell, 200000, cfg.seed);
  if (!cfg.times.empty()) {
    res.times = cfg.times;
  } else {
    for (double a : cfg.t_over_TL) res.times.push_back(a * res.window.T_L);
  }
  for (double t : res.times) {
    if (t < 0.0) throw InvalidArgument("negative time in grid");
    for (auto N : cfg.Ns) res.rows.push_back(chaos_cell(cfg, N, t));
  }
  std::sort(res.rows.begin(), res.rows.end(),
            [](const ChaosRow& a, const ChaosRow& b) { return a.t != b.t ? a.t < b.t : a.N < b.N; });
  return res;
}

/// Kendall tau of the seminorm against decreasing N order at time t, so a
/// value near 1 means the seminorm falls as N grows.
inline double chaos_decrease_tau(const std::vector<ChaosRow>& rows, double t) {
  std::vector<double> ys;
  for (const auto& r : rows)
    if (r.t == t) ys.push_back(r.seminorm);
  return -kendall_trend(ys);
}

/// ||f_{0,N} - f0||_{L^1(E+I <= R^2)}, the t = 0 value in closed form:
/// m (1 - 2 F0(B) + F0(Omega)) / (1 + m), B inside Omega.
inline double chaos_initial_closed_form(const DensitySpec& family, double R) {
  const double m = bump_mass(family);
  const double fb = reference_mass_in_bump(family);
  const double fo = boost::math::gamma_p(static_cast<double>(family.dim), R * R);
  return m * (1.0 - 2.0 * fb + fo) / (1.0 + m);
}

inline void write_chaos_header(std::ostream& os) {
  os << "N,epsilon,ell,s,k,eta,Tprime,R,t,n_depth,seminorm,stderr,flag,seed,mc_budget,resamples,tail,sup_gap\n";
}

inline void write_chaos_row(std::ostream& os, const ChaosRow& r) {
  using detail::format_double;
  os << r.N << ',' << format_double(r.epsilon) << ',' << format_double(r.ell) << ',' << r.s << ',' << r.k << ','
     << format_double(r.eta) << ',' << format_double(r.T_prime) << ',' << format_double(r.R) << ','
     << format_double(r.t) << ',' << r.n_depth << ',' << format_double(r.seminorm) << ','
     << format_double(r.stderr_) << ',' << r.flag << ',' << r.seed << ',' << r.mc_budget << ',' << r.resamples
     << ',' << format_double(r.tail) << ',' << format_double(r.sup_gap) << '\n';
}

struct ReversalRates {
  std::size_t members = 0;
  double forward = 0.0;   ///< fraction of sampled endpoints the search confirms in V
  double reversed = 0.0;  ///< fraction whose velocity reversal is in V
};

/// Samples V_s^k(T) members as pseudo-trajectory endpoints and tests the
/// velocity-reversed configurations for membership.
inline ReversalRates reversal_rates(std::size_t s, std::size_t k, double T, double eps, int dim,
                                    std::size_t samples, std::uint64_t seed) {
  if (k == 0 || k >= s) throw InvalidArgument("need 0 < k < s");
  ReversalRates out;
  std::size_t fwd = 0, rev = 0;
  Engine g = make_engine(seed);
  while (out.members < samples) {
    Configuration root(dim, eps);
    for (std::size_t i = 0; i < s - k; ++i) {
      const Vec v = gaussian_vec(g, dim);
      root.push_back(gaussian_vec(g, dim) + v * T, v);
    }
    std::vector<CreationRecord> recs;
    detail::draw_creations(g, s - k, k, T, dim, Vec{}, 1.0, 0.0, recs);
    if (!in_phase_space(root)) continue;
    try {
      const PseudoTrajectory pt = build(root, T, recs);
      if (!pt.ok()) continue;
      const Configuration& z = pt.endpoint();
      const bool f = v_set_membership(z, k, T).found;
      const bool r = v_set_membership(flip_velocities(z), k, T).found;
      ++out.members;
      fwd += f;
      rev += r;
    } catch (const DegenerateConfiguration&) {
    }
  }
  out.forward = static_cast<double>(fwd) / static_cast<double>(out.members);
  out.reversed = static_cast<double>(rev) / static_cast<double>(out.members);
  return out;
}

}  // namespace hslab
