#pragma once

#include <cstdio>
#include <ostream>

#include "hslab/dual/evaluate.hpp"
#include "hslab/experiments/probes.hpp"
#include "hslab/experiments/report.hpp"

namespace hslab {

struct HatProbeParams {
  std::uint64_t seed = 1;
  std::size_t probes = 1000;
  double t_max = 3.0;
  std::vector<double> monotone_times{0.3, 0.8, 1.5, 2.5};
  double bound_time = 2.0;
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(HatProbeParams, seed, probes, t_max, monotone_times, bound_time)

namespace detail {

// Integer-valued one-body score in {-2,...,3}.
inline int probe_score(const Vec& x, const Vec& v) {
  return static_cast<int>(std::floor(2.5 * std::sin(1.7 * x[0] + 0.9 * v[1] - 0.4 * x[1]))) + (x[0] > 0);
}

inline double sum_score(const Configuration& z) {
  double a = 0;
  for (std::size_t i = 0; i < z.count(); ++i) a += probe_score(z.x[i], z.v[i]);
  return a;
}

inline double sum_abs_score(const Configuration& z) {
  double a = 0;
  for (std::size_t i = 0; i < z.count(); ++i) a += std::abs(probe_score(z.x[i], z.v[i]));
  return a;
}

// Dense clusters, redrawn when the forward flow hits a degenerate event.
template <typename F>
void with_resample(Engine& g, std::size_t s, F&& f) {
  for (;;) {
    const auto z = random_cluster(g, s, 2, 0.5, 0.8, 1.0);
    try {
      f(z);
      return;
    } catch (const DegenerateConfiguration&) {
    }
  }
}

}  // namespace detail

/// |phi_N| <= hat phi_N pointwise, and the lower/upper envelopes sandwich
/// phi_N. CSV: property,probe,s,t,value,bound,violation
inline CheckOutcome comparison_check(const HatProbeParams& p, std::ostream& csv) {
  csv << "property,probe,s,t,value,bound,violation\n";
  ObservableSpec dual, hat, env;
  dual.N = hat.N = 7;
  hat.hierarchy = Hierarchy::hat;
  env.N = 6;
  env.hierarchy = Hierarchy::upper_envelope;
  for (std::size_t s = 1; s <= 4; ++s) {
    dual.levels.emplace(s, LevelFunction::function(detail::sum_score));
    hat.levels.emplace(s, LevelFunction::function([](const Configuration& z) { return detail::sum_abs_score(z) + 1; }));
    env.levels.emplace(s, LevelFunction::function([](const Configuration& z) {
      return detail::sum_score(z) + (z.x[0][1] > 0 ? 1 : 0) + 1;
    }));
    env.partner.emplace(s, LevelFunction::function([](const Configuration& z) { return detail::sum_score(z) - 2; }));
  }
  ObservableSpec dual6 = dual;
  dual6.N = 6;

  Engine g = make_engine(p.seed, 10);
  std::size_t hat_bad = 0, env_bad = 0, jumped = 0;
  for (std::size_t n = 0; n < p.probes; ++n) {
    const std::size_t s = 2 + n % 3;
    const double t = p.t_max * uniform01(g);
    detail::with_resample(g, s, [&](const Configuration& z) {
      JumpLedger led;
      const double a = evaluate_dual(dual, t, z, &led);
      const double b = evaluate(hat, t, z);
      const bool bad = std::abs(a) > b;
      hat_bad += bad;
      jumped += !led.jumps.empty();
      csv << "hat," << n << ',' << s << ',' << csv_num(t) << ',' << csv_num(a) << ',' << csv_num(b) << ',' << bad
          << '\n';
    });
  }
  for (std::size_t n = 0; n < p.probes; ++n) {
    const std::size_t s = 2 + n % 3;
    const double t = p.t_max * uniform01(g);
    detail::with_resample(g, s, [&](const Configuration& z) {
      const double a = evaluate_dual(dual6, t, z);
      const auto [up, lo] = evaluate_envelopes(env, t, z);
      const bool bad = lo > a || a > up;
      env_bad += bad;
      csv << "lower," << n << ',' << s << ',' << csv_num(t) << ',' << csv_num(lo) << ',' << csv_num(a) << ','
          << (lo > a) << '\n';
      csv << "upper," << n << ',' << s << ',' << csv_num(t) << ',' << csv_num(a) << ',' << csv_num(up) << ','
          << (a > up) << '\n';
    });
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "hat bound %zu violations (%zu probes with jumps), envelope %zu violations", hat_bad,
                jumped, env_bad);
  return {hat_bad == 0 && env_bad == 0, buf};
}

/// hat phi^{(j)} monotone in t, divisible by (N-j)...(N-s+1) and below the
/// collision-count bound. CSV: property,probe,s,j,N,t,value,bound,violation
inline CheckOutcome hat_structure_check(const HatProbeParams& p, std::ostream& csv) {
  csv << "property,probe,s,j,N,t,value,bound,violation\n";
  Engine g = make_engine(p.seed, 11);
  std::size_t mono_bad = 0, increases = 0, div_bad = 0, bound_bad = 0;
  for (std::size_t n = 0; n < p.probes; ++n) {
    const std::size_t s = 2 + n % 3;
    const std::size_t j = 1 + n % (s - 1);
    detail::with_resample(g, s, [&](const Configuration& z) {
      std::vector<BigInt> vals;
      for (double t : p.monotone_times) vals.push_back(evaluate_hat(j, 8, t, z));
      BigInt prev = 0;
      for (std::size_t m = 0; m < vals.size(); ++m) {
        const bool bad = vals[m] < prev;
        mono_bad += bad;
        increases += vals[m] > prev;
        csv << "monotone," << n << ',' << s << ',' << j << ",8," << csv_num(p.monotone_times[m]) << ',' << vals[m]
            << ',' << prev << ',' << bad << '\n';
        prev = vals[m];
      }
    });
  }
  for (std::size_t n = 0; n < p.probes; ++n) {
    const std::size_t s = 2 + n % 4;
    const std::size_t j = 1 + n % (s - 1);
    const std::size_t N = s + n % 6;
    detail::with_resample(g, s, [&](const Configuration& z) {
      const BigInt v = evaluate_hat(j, N, p.bound_time, z);
      const BigInt f = falling_product(N, j, s);
      const bool bad_d = v % f != 0;
      const double bound = log_collision_bound(j, s, N);
      const bool bad_b = log_of(v) > bound;
      div_bad += bad_d;
      bound_bad += bad_b;
      csv << "divisible," << n << ',' << s << ',' << j << ',' << N << ',' << csv_num(p.bound_time) << ',' << v << ','
          << f << ',' << bad_d << '\n';
      csv << "log_bound," << n << ',' << s << ',' << j << ',' << N << ',' << csv_num(p.bound_time) << ','
          << csv_num(log_of(v)) << ',' << csv_num(bound) << ',' << bad_b << '\n';
    });
  }
  char buf[200];
  std::snprintf(buf, sizeof buf, "monotone %zu violations (%zu increases), divisibility %zu, bound %zu", mono_bad,
                increases, div_bad, bound_bad);
  return {mono_bad == 0 && div_bad == 0 && bound_bad == 0, buf};
}

}  // namespace hslab
