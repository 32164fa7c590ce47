#pragma once

#include <cmath>
#include <numbers>
#include <ostream>
#include <vector>

#include "hslab/dual/evaluate.hpp"
#include "hslab/numerics/parallel.hpp"
#include "hslab/numerics/rng.hpp"
#include "hslab/numerics/stats.hpp"

namespace hslab {

struct NormOptions {
  double beta = 1.0;
  double mu = 0.0;
  /// Weight e^{-beta (E_s + I_s)} instead of e^{-beta E_s}.
  bool with_inertia = false;
  /// Position proposal width when the weight has no spatial decay; the data
  /// must then be integrable in x for the estimate to be meaningful.
  double x_sigma = 1.0;
  double diameter = 0.1;
  int dim = 2;
  std::size_t samples = 20000;
  std::uint64_t seed = 1;
  unsigned jobs = 1;
};

/// sum_s 1/s! int_{D_s} |phi^{(s)}(t)| w_s e^{-mu s}, each level by
/// importance sampling from the Gaussian that matches the weight. Degenerate
/// probes are redrawn and counted in `samples` of the returned estimate only
/// when accepted.
inline Estimate weighted_l1_norm(const ObservableSpec& sp, double t, const NormOptions& opt) {
  Estimate total;
  double var = 0.0;
  const std::size_t top = std::min(sp.level_cap, sp.N);
  for (std::size_t s = std::max<std::size_t>(1, sp.lowest_level()); s <= top; ++s) {
    const double ds = static_cast<double>(opt.dim * static_cast<int>(s));
    const double v_sigma = 1.0 / std::sqrt(opt.beta);
    const double x_sigma = opt.with_inertia ? v_sigma : opt.x_sigma;
    // w/q = (2 pi / beta)^{ds/2} (velocity part) times the position factor
    const double log_vel = 0.5 * ds * std::log(2.0 * std::numbers::pi / opt.beta);
    const double log_pos_inertia = 0.5 * ds * std::log(2.0 * std::numbers::pi / opt.beta);
    double log_fact = 0.0;
    for (std::size_t a = 2; a <= s; ++a) log_fact += std::log(static_cast<double>(a));
    const double prefactor = std::exp(-opt.mu * static_cast<double>(s) - log_fact + log_vel +
                                      (opt.with_inertia ? log_pos_inertia : 0.0));
    std::vector<double> w(opt.samples);
    parallel_for(opt.samples, opt.jobs, [&](std::size_t n) {
      Engine g = make_engine(stream_seed(opt.seed, s), n);
      for (;;) {
        Configuration z(opt.dim, opt.diameter);
        double log_qx = 0.0;
        for (std::size_t i = 0; i < s; ++i) {
          const Vec x = gaussian_vec(g, opt.dim, x_sigma);
          z.push_back(x, gaussian_vec(g, opt.dim, v_sigma));
          log_qx += -0.5 * norm2(x) / (x_sigma * x_sigma) -
                    0.5 * opt.dim * std::log(2.0 * std::numbers::pi * x_sigma * x_sigma);
        }
        if (s > 1 && min_gap(z) <= 0.0) {
          w[n] = 0.0;
          return;
        }
        try {
          const double phi = std::abs(evaluate(sp, t, z));
          w[n] = opt.with_inertia ? phi : phi * std::exp(-log_qx);
          return;
        } catch (const DegenerateConfiguration&) {
          continue;
        }
      }
    });
    const Estimate e = mean_estimate(w);
    total.value += prefactor * e.value;
    var += prefactor * prefactor * e.stderr_ * e.stderr_;
    total.samples += e.samples;
  }
  total.stderr_ = std::sqrt(var);
  return total;
}

/// Probe CSV: `hierarchy,j,s,N,t,value_integer_part,value,jumps,resamples`.
struct ProbeRow {
  Hierarchy hierarchy = Hierarchy::hat;
  std::size_t j = 0, s = 0, N = 0;
  double t = 0.0;
  BigInt integer_part = 0;
  double value = 0.0;
  std::size_t jumps = 0;
  std::size_t resamples = 0;
};

inline void write_probe_header(std::ostream& os) {
  os << "hierarchy,j,s,N,t,value_integer_part,value,jumps,resamples\n";
}

inline void write_probe_row(std::ostream& os, const ProbeRow& r) {
  os << to_string(r.hierarchy) << ',' << r.j << ',' << r.s << ',' << r.N << ','
     << detail::format_double(r.t) << ',' << r.integer_part << ',' << detail::format_double(r.value)
     << ',' << r.jumps << ',' << r.resamples << '\n';
}

}  // namespace hslab
