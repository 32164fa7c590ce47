#pragma once

#include <algorithm>
#include <cstdio>
#include <ostream>

#include "hslab/dual/evaluate.hpp"
#include "hslab/experiments/pseudo_probes.hpp"
#include "hslab/experiments/report.hpp"
#include "hslab/numerics/stats.hpp"
#include "hslab/pseudo/vset.hpp"

namespace hslab {

struct SingularScalingParams {
  std::uint64_t seed = 1;
  std::vector<std::pair<std::size_t, std::size_t>> sk{{2, 1}, {3, 1}, {3, 2}};
  std::vector<int> eps_exponents{4, 5, 6, 7, 8};
  double T = 1.0;
  int dim = 2;
  std::size_t samples = 4000;
  double slope_tol = 0.15;
  double sigmas = 3.0;
  std::size_t positives = 1000;
  /// direct indicator-route samples at the largest diameter
  std::size_t anchor_samples = 200000;
  unsigned jobs = 1;
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(SingularScalingParams, seed, sk, eps_exponents, T, dim, samples,
                                                slope_tol, sigmas, positives, anchor_samples, jobs)

/// Slope of log|W_s^k(T)| against log eps, and W/V in [1, (s+k)!] up to
/// sampling error. The parametrized W estimate is tied to the direct
/// indicator measure at the largest diameter.
/// CSV (measures): s,k,epsilon,w,w_stderr,v,v_stderr,ratio,ratio_stderr,ratio_pass
/// CSV (fits): s,k,slope,target,relative_error,anchor_epsilon,anchor_w,anchor_indicator,anchor_stderr,pass
inline CheckOutcome singular_scaling(const SingularScalingParams& p, std::ostream& measures, std::ostream& fits) {
  measures << "s,k,epsilon,w,w_stderr,v,v_stderr,ratio,ratio_stderr,ratio_pass\n";
  fits << "s,k,slope,target,relative_error,anchor_epsilon,anchor_w,anchor_indicator,anchor_stderr,pass\n";
  CheckOutcome out{true, {}};
  char buf[200];
  for (const auto& [s, k] : p.sk) {
    std::vector<double> le, lw;
    std::size_t ratio_bad = 0;
    MeasureEstimate anchor_w, anchor_i;
    double anchor_eps = 0.0;
    double lo_ratio = INFINITY, hi_ratio = 0.0;
    const double cap = std::tgamma(static_cast<double>(s + k) + 1.0);
    for (int e : p.eps_exponents) {
      MeasureOptions o;
      o.s = s;
      o.k = k;
      o.T = p.T;
      o.dim = p.dim;
      o.epsilon = std::ldexp(1.0, -e);
      o.samples = p.samples;
      o.seed = stream_seed(p.seed, 100 * s + 10 * k + static_cast<std::uint64_t>(e));
      o.jobs = p.jobs;
      o.route = MeasureRoute::parametrized_w;
      const MeasureEstimate w = singular_measure_estimate(o);
      o.route = MeasureRoute::parametrized_v;
      o.seed = stream_seed(o.seed, 1);
      const MeasureEstimate v = singular_measure_estimate(o);
      if (e == *std::min_element(p.eps_exponents.begin(), p.eps_exponents.end())) {
        anchor_eps = o.epsilon;
        anchor_w = w;
        MeasureOptions a = o;
        a.route = MeasureRoute::indicator_w;
        a.samples = p.anchor_samples;
        a.seed = stream_seed(o.seed, 2);
        anchor_i = singular_measure_estimate(a);
      }
      const double r = w.estimate / v.estimate;
      const double rs = r * std::hypot(w.stderr_ / w.estimate, v.stderr_ / v.estimate);
      const bool ok = r + p.sigmas * rs >= 1.0 && r - p.sigmas * rs <= cap;
      ratio_bad += !ok;
      lo_ratio = std::min(lo_ratio, r);
      hi_ratio = std::max(hi_ratio, r);
      le.push_back(std::log(o.epsilon));
      lw.push_back(std::log(w.estimate));
      measures << s << ',' << k << ',' << csv_num(o.epsilon) << ',' << csv_num(w.estimate) << ','
               << csv_num(w.stderr_) << ',' << csv_num(v.estimate) << ',' << csv_num(v.stderr_) << ',' << csv_num(r)
               << ',' << csv_num(rs) << ',' << ok << '\n';
    }
    const double slope = fit_line(le, lw).slope;
    const double target = static_cast<double>(k) * (p.dim - 1);
    const double rel = std::abs(slope - target) / target;
    const double anchor_se = std::hypot(anchor_w.stderr_, anchor_i.stderr_);
    const bool anchored = std::abs(anchor_w.estimate - anchor_i.estimate) <= p.sigmas * anchor_se;
    const bool ok = rel <= p.slope_tol && anchored;
    fits << s << ',' << k << ',' << csv_num(slope) << ',' << csv_num(target) << ',' << csv_num(rel) << ','
         << csv_num(anchor_eps) << ',' << csv_num(anchor_w.estimate) << ',' << csv_num(anchor_i.estimate) << ','
         << csv_num(anchor_se) << ',' << ok << '\n';
    std::snprintf(buf, sizeof buf, "(s,k)=(%zu,%zu) slope %.3f vs %g, indicator anchor %.2f sd, W/V in [%.2f, %.2f] cap %g",
                  s, k, slope, target, (anchor_w.estimate - anchor_i.estimate) / anchor_se, lo_ratio, hi_ratio, cap);
    merge(out, {ok && ratio_bad == 0, buf});
  }
  return out;
}

/// Constructed V-witnesses replay to their endpoint and agree with the
/// hat-based W membership. CSV: trial,s,k,replay_error,horizon,w_member,agree
inline CheckOutcome vw_cross_validation(const SingularScalingParams& p, std::ostream& csv) {
  csv << "trial,s,k,replay_error,horizon,w_member,agree\n";
  Engine g = make_engine(p.seed, 30);
  const double T = 2.0;
  std::size_t positives = 0, agree = 0, degenerate = 0;
  for (std::size_t n = 0; positives < p.positives; ++n) {
    const std::size_t k = 1 + n % 2, s0 = 1 + (n / 2) % 2;
    const auto pt = random_pseudo_trajectory(g, s0, k, 0.9 * T, 2, 0.3, 0.7);
    const Configuration& z = pt.endpoint();
    try {
      const VSearch res = v_set_membership(z, k, T);
      double err = INFINITY, horizon = NAN;
      if (res.found) {
        const auto again = build(res.witness->root, res.witness->horizon, res.witness->records);
        err = again.ok() ? max_abs_diff(again.endpoint(), z) : INFINITY;
        horizon = res.witness->horizon;
      }
      const bool w = singular_membership(z, k, T, 10);
      const bool ok = res.found && err < 1e-8 && horizon < T && w;
      agree += ok;
      ++positives;
      csv << n << ',' << z.count() << ',' << k << ',' << csv_num(err) << ',' << csv_num(horizon) << ',' << w << ','
          << ok << '\n';
    } catch (const DegenerateConfiguration&) {
      ++degenerate;
    }
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "%zu/%zu constructed positives agree (%zu degenerate redrawn)", agree, positives,
                degenerate);
  return {agree == positives, buf};
}

}  // namespace hslab
