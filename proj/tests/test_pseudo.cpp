#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "hslab/ensembles/ensemble.hpp"
#include "hslab/pseudo/vset.hpp"
#include "support.hpp"

using namespace hslab;
using hslab::testing::max_abs_diff;
using hslab::testing::random_cluster;

namespace {

Vec v2(double a, double b) { return Vec{{a, b, 0.0}}; }

Configuration single(const Vec& x, const Vec& v, double eps = 0.2) {
  Configuration z(2, eps);
  z.push_back(x, v);
  return z;
}

// Random creation records with times ordered in (0, t).
std::vector<CreationRecord> random_records(Engine& g, std::size_t s, std::size_t k, double t, int dim) {
  std::vector<double> times(k);
  for (auto& a : times) a = t * (0.05 + 0.9 * uniform01(g));
  std::sort(times.begin(), times.end(), std::greater<>());
  std::vector<CreationRecord> recs(k);
  for (std::size_t j = 0; j < k; ++j) {
    recs[j].time = times[j];
    recs[j].velocity = gaussian_vec(g, dim);
    recs[j].omega = uniform_sphere(g, dim);
    recs[j].parent = static_cast<std::size_t>(g() % (s + j));
  }
  return recs;
}

// A well-defined pseudo-trajectory, redrawn until build succeeds.
PseudoTrajectory random_pt(Engine& g, std::size_t s, std::size_t k, double t, int dim, double eps,
                           double sigma_x = 1.0) {
  for (;;) {
    const auto root = random_cluster(g, s, dim, eps, sigma_x, 1.0);
    try {
      auto pt = build(root, t, random_records(g, s, k, t, dim));
      if (pt.ok()) return pt;
    } catch (const DegenerateConfiguration&) {
    }
  }
}

}  // namespace

TEST(Build, EmptyRecordsIsBackwardFlow) {
  Engine g = make_engine(61);
  const auto root = random_cluster(g, 4, 2, 0.3, 0.7, 1.0);
  const auto pt = build(root, 1.7, {});
  ASSERT_TRUE(pt.ok());
  ASSERT_EQ(pt.segments.size(), 1u);
  EXPECT_EQ(pt.kernel_product(), 1.0);
  EXPECT_EQ(pt.endpoint(), flow(root, -1.7).final);
}

TEST(Build, LossBranchKeepsVelocities) {
  const auto root = single(v2(0, 0), v2(1, 0));
  CreationRecord r{0.5, v2(-1, 0), v2(1, 0), 0};
  const auto pt = build(root, 1.0, {r});
  ASSERT_TRUE(pt.ok());
  const double a = dot(r.omega, r.velocity - v2(1, 0));
  ASSERT_LT(a, 0.0);
  EXPECT_FALSE(pt.kernel[0].gain);
  EXPECT_EQ(pt.kernel[0].value, -std::max(-a, 0.0));
  const auto& c = pt.segments[0];
  EXPECT_EQ(c.v[0], v2(1, 0));
  EXPECT_EQ(c.v[1], v2(-1, 0));
  EXPECT_NEAR(c.x[1][0], c.x[0][0] + 0.2, 1e-15);
  // parent moved back from x=0 at t=1 to x=-0.5 at t=0.5, then to -1 at 0
  EXPECT_NEAR(pt.endpoint().x[0][0], -1.0, 1e-14);
  EXPECT_NEAR(pt.endpoint().x[1][0], -0.3 + 0.5, 1e-14);
}

TEST(Build, GainBranchAppliesScattering) {
  const auto root = single(v2(0, 0), v2(1, 0));
  CreationRecord r{0.5, v2(3, 0), v2(1, 0), 0};
  const auto pt = build(root, 1.0, {r});
  ASSERT_TRUE(pt.ok());
  EXPECT_TRUE(pt.kernel[0].gain);
  EXPECT_EQ(pt.kernel[0].value, 2.0);
  EXPECT_EQ(pt.segments[0].v[0], v2(3, 0));
  EXPECT_EQ(pt.segments[0].v[1], v2(1, 0));
}

TEST(Build, OverlapRejected) {
  Configuration root(2, 0.2);
  root.push_back(v2(0, 0), v2(0, 0));
  root.push_back(v2(0.35, 0), v2(0, 0));
  CreationRecord r{0.5, v2(0, 1), v2(1, 0), 0};
  EXPECT_EQ(build(root, 1.0, {r}).status, PseudoStatus::overlap_rejected);
}

TEST(Build, MalformedRecords) {
  const auto root = single(v2(0, 0), v2(1, 0));
  EXPECT_THROW(build(root, 1.0, {{1.5, v2(0, 1), v2(1, 0), 0}}), InvalidArgument);
  EXPECT_THROW(build(root, 1.0, {{0.5, v2(0, 1), v2(1, 0), 1}}), InvalidArgument);
  EXPECT_THROW(build(root, 1.0, {{0.5, v2(0, 1), v2(1, 1), 0}}), InvalidArgument);
  EXPECT_THROW(build(root, 1.0, {{0.3, v2(0, 1), v2(1, 0), 0}, {0.4, v2(0, 1), v2(0, 1), 0}}),
               InvalidArgument);
  EXPECT_THROW(build(root, 1.0, {{0.0, v2(0, 1), v2(1, 0), 0}}), InvalidArgument);
}

TEST(Build, EndpointDimensionAndBranchCoherence) {
  Engine g = make_engine(62);
  for (int n = 0; n < 300; ++n) {
    const std::size_t s = 1 + static_cast<std::size_t>(n % 3), k = 1 + static_cast<std::size_t>(n % 2);
    const auto pt = random_pt(g, s, k, 2.0, 2, 0.2);
    EXPECT_EQ(pt.endpoint().count(), s + k);
    ASSERT_EQ(pt.kernel.size(), k);
    for (std::size_t j = 0; j < k; ++j) {
      const auto& seg = pt.segments[j];
      const bool changed = seg.v.back() != pt.records[j].velocity;
      EXPECT_EQ(changed, pt.kernel[j].gain);
      EXPECT_EQ(pt.kernel[j].value > 0, pt.kernel[j].gain);
      // new particle sits at contact with its parent
      EXPECT_NEAR(norm(seg.x.back() - seg.x[pt.records[j].parent]), 0.2, 1e-12);
    }
  }
}

TEST(Build, RecollisionFlagMatchesSegments) {
  Engine g = make_engine(63);
  std::size_t flagged = 0;
  for (int n = 0; n < 300; ++n) {
    const auto pt = random_pt(g, 2, 2, 3.0, 2, 0.4, 0.5);
    std::size_t events = 0;
    double now = pt.horizon;
    Configuration z = pt.root;
    for (std::size_t j = 0; j <= pt.records.size(); ++j) {
      const double until = j < pt.records.size() ? pt.records[j].time : 0.0;
      events += flow(z, -(now - until)).events.size();
      if (j < pt.records.size()) z = pt.segments[j];
      now = until;
    }
    EXPECT_EQ(pt.recollision_free(), events == 0);
    flagged += !pt.recollision_free();
  }
  EXPECT_GT(flagged, 5u);
}

TEST(Build, DumpFormat) {
  const auto root = single(v2(0, 0), v2(1, 0));
  const auto pt = build(root, 1.0, {{0.5, v2(-1, 0), v2(1, 0), 0}});
  std::ostringstream os;
  write_trajectory(os, pt);
  const std::string s = os.str();
  EXPECT_EQ(s.rfind("pseudo_trajectory status ok horizon 1 creations 1 recollisions 0\nroot\n", 0), 0u);
  EXPECT_NE(s.find("record 1 time 0.5 parent 0 velocity -1 0 omega 1 0 branch - factor -2\n"), std::string::npos);
  EXPECT_NE(s.find("segment 2\n"), std::string::npos);
}

TEST(Jacobian, NoCreationIsMeasurePreserving) {
  Engine g = make_engine(64);
  int checked = 0;
  for (int n = 0; n < 30; ++n) {
    const auto root = random_cluster(g, 3, 2, 0.4, 0.5, 1.0);
    try {
      const auto c = jacobian_identity_check(build(root, 2.0, {}));
      if (c.fd.consistency > 1e-3) continue;
      EXPECT_LE(c.relative_error, 1e-4);
      ++checked;
    } catch (const IllConditioned&) {
    } catch (const DegenerateConfiguration&) {
    }
  }
  EXPECT_GT(checked, 20);
}

TEST(Jacobian, IdentityHoldsForCreations) {
  Engine g = make_engine(65);
  for (auto [k, dim, tol] : {std::tuple{1u, 2, 1e-4}, std::tuple{2u, 2, 1e-3}, std::tuple{1u, 3, 1e-4}}) {
    int checked = 0;
    for (int n = 0; n < 60 && checked < 20; ++n) {
      const auto pt = random_pt(g, 2, k, 2.0, dim, 0.3);
      try {
        const auto c = jacobian_identity_check(pt);
        if (c.fd.consistency > 1e-3) continue;
        EXPECT_LE(c.relative_error, tol) << "k=" << k << " d=" << dim;
        ++checked;
      } catch (const IllConditioned&) {
      }
    }
    EXPECT_GE(checked, 15) << "k=" << k << " d=" << dim;
  }
}

TEST(Duhamel, CoefficientsAndFreeTerm) {
  for (std::size_t N : {1u, 5u, 100u})
    for (std::size_t s = 1; s <= std::min<std::size_t>(N, 3); ++s) EXPECT_EQ(duhamel_coefficient(N, 0, s, 0.1, 2), 1.0);
  EXPECT_NEAR(duhamel_coefficient(10, 2, 3, 0.1, 3), 7 * 6 * 1e-4, 1e-15);
  EXPECT_EQ(duhamel_coefficient(4, 2, 3, 0.1, 2), 0.0);

  const auto spec = DensitySpec::gaussian(2, 1.0, 1.0);
  Engine g = make_engine(66);
  const auto z = random_cluster(g, 2, 2, 0.1, 1.0, 1.0);
  DuhamelOptions opt;
  opt.depth = 0;
  const auto d = duhamel_point_value(5, 1.3, z, tensorized(spec), opt);
  const auto back = flow(z, -1.3).final;
  EXPECT_EQ(d.value, density(spec, back.x[0], back.v[0]) * density(spec, back.x[1], back.v[1]));
  EXPECT_EQ(d.stderr_, 0.0);
}

TEST(Duhamel, FirstOrderMatchesEnsemble) {
  // f_N^{(1)}(t) tested against a smooth bump, N = 3
  const std::size_t N = 3;
  const double eps = 0.15, t = 1.0;
  const auto spec = DensitySpec::gaussian(2, 0.6, 1.0);
  auto test = [](const Configuration& z) {
    return std::exp(-norm2(z.x[0] - v2(0.5, 0)) - 0.5 * norm2(z.v[0]));
  };
  const auto ens = make_ensemble_with_diameter(spec, N, eps, 40000, 67);
  const auto stat = estimate_tuple_statistic(ens, t, test, 1);

  // outer integral over z_1 by importance sampling from the data itself
  const auto data = tensorized(spec);
  const std::size_t outer = 400;
  std::vector<double> vals(outer);
  double var_inner = 0.0;
  for (std::size_t n = 0; n < outer; ++n) {
    Engine g = make_engine(68, n);
    const Vec x = gaussian_vec(g, 2, 0.9, v2(0.5, 0)), v = gaussian_vec(g, 2, 1.0);
    const double q = std::exp(-0.5 * norm2(x - v2(0.5, 0)) / 0.81 - 0.5 * norm2(v)) / (4 * std::numbers::pi * std::numbers::pi * 0.81);
    DuhamelOptions opt;
    opt.depth = 1;
    opt.samples = 400;
    opt.seed = stream_seed(69, n);
    opt.v_sigma = 1.2;
    const auto z = single(x, v, eps);
    const auto d = duhamel_point_value(N, t, z, data, opt);
    vals[n] = test(z) * d.value / q;
    var_inner += std::pow(test(z) * d.stderr_ / q, 2);
  }
  const Estimate e = mean_estimate(vals);
  const double se = std::hypot(e.stderr_, stat.stderr_);
  EXPECT_NEAR(e.value, stat.estimate, 3 * se) << "duhamel " << e.value << " ensemble " << stat.estimate;
}

TEST(VSet, ZeroCreationsAndConstructedPositives) {
  Engine g = make_engine(70);
  EXPECT_TRUE(v_set_membership(random_cluster(g, 2, 2, 0.3, 1, 1), 0, 1.0).found);
  std::size_t agree = 0, total = 0;
  for (int n = 0; n < 1000; ++n) {
    const std::size_t k = 1 + static_cast<std::size_t>(n % 2), s0 = 1 + static_cast<std::size_t>((n / 2) % 2);
    const double T = 2.0;
    const auto pt = random_pt(g, s0, k, 0.9 * T, 2, 0.3, 0.7);
    const Configuration& z = pt.endpoint();
    ++total;
    try {
      const auto res = v_set_membership(z, k, T);
      ASSERT_TRUE(res.found);
      const auto again = build(res.witness->root, res.witness->horizon, res.witness->records);
      ASSERT_TRUE(again.ok());
      EXPECT_LT(max_abs_diff(again.endpoint(), z), 1e-8);
      EXPECT_LT(res.witness->horizon, T);
      agree += singular_membership(z, k, T, 10);
    } catch (const DegenerateConfiguration&) {
      --total;
    }
  }
  EXPECT_EQ(agree, total);
  EXPECT_GT(total, 950u);
}

TEST(VSet, UnionOverPermutationsIsW) {
  Engine g = make_engine(71);
  std::size_t members = 0;
  for (int n = 0; n < 400; ++n) {
    const std::size_t s = 2 + static_cast<std::size_t>(n % 2), k = 1 + static_cast<std::size_t>(n % (s - 1));
    const auto z = random_cluster(g, s, 2, 0.4, 0.6, 1.0);
    try {
      const bool w = singular_membership(z, k, 2.0, 10);
      std::vector<std::size_t> sigma(s);
      std::iota(sigma.begin(), sigma.end(), 0);
      bool v = false;
      do {
        v = v || v_set_membership(permuted(z, sigma), k, 2.0).found;
      } while (!v && std::next_permutation(sigma.begin(), sigma.end()));
      EXPECT_EQ(w, v);
      members += w;
    } catch (const DegenerateConfiguration&) {
    }
  }
  EXPECT_GT(members, 30u);
}

TEST(VSet, WitnessCountsBoundEachOther) {
  Engine g = make_engine(72);
  for (int n = 0; n < 300; ++n) {
    const auto pt = random_pt(g, 1 + static_cast<std::size_t>(n % 2), 1, 1.5, 2, 0.3, 0.7);
    const auto& z = pt.endpoint();
    const std::size_t v = v_witness_count(z, 1, 2.0), w = w_witness_count(z, 1, 2.0);
    EXPECT_GE(v, 1u);
    EXPECT_GE(w, v);
  }
}

TEST(Measure, RoutesAgreeAtOneCreation) {
  MeasureOptions o;
  o.s = 2;
  o.k = 1;
  o.T = 1.0;
  o.epsilon = 0.125;
  o.samples = 40000;
  o.route = MeasureRoute::parametrized_w;
  const auto a = singular_measure_estimate(o);
  o.route = MeasureRoute::indicator_w;
  o.samples = 200000;
  o.seed = 2;
  const auto b = singular_measure_estimate(o);
  EXPECT_NEAR(a.estimate, b.estimate, 3 * std::hypot(a.stderr_, b.stderr_));
  EXPECT_EQ(a.lost, 0u);
}

TEST(Measure, SandwichAndMonotone) {
  MeasureOptions o;
  o.s = 3;
  o.k = 1;
  o.epsilon = 0.1;
  o.samples = 20000;
  o.T = 1.0;
  o.route = MeasureRoute::parametrized_v;
  const auto v = singular_measure_estimate(o);
  o.route = MeasureRoute::parametrized_w;
  const auto w1 = singular_measure_estimate(o);
  EXPECT_GE(w1.estimate + 2 * std::hypot(v.stderr_, w1.stderr_), v.estimate);
  EXPECT_LE(w1.estimate, 24 * v.estimate + 2 * std::hypot(24 * v.stderr_, w1.stderr_));
  o.T = 2.0;
  o.seed = 3;
  const auto w2 = singular_measure_estimate(o);
  EXPECT_GE(w2.estimate + 2 * std::hypot(w1.stderr_, w2.stderr_), w1.estimate);
}

TEST(Measure, ScalesLikeDiameterPower) {
  std::vector<double> le, lm;
  for (int e = 4; e <= 8; ++e) {
    MeasureOptions o;
    o.s = 2;
    o.k = 1;
    o.epsilon = std::ldexp(1.0, -e);
    o.samples = 4000;
    o.seed = 5;
    const auto m = singular_measure_estimate(o);
    le.push_back(std::log(o.epsilon));
    lm.push_back(std::log(m.estimate));
  }
  EXPECT_NEAR(fit_line(le, lm).slope, 1.0, 0.15);
}

TEST(Measure, CsvRow) {
  std::ostringstream os;
  write_measure_header(os);
  MeasureOptions o;
  MeasureEstimate m{0.5, 0.25, 10, 0, 0};
  write_measure_row(os, o, m);
  EXPECT_EQ(os.str(), "s,k,T,epsilon,estimate,stderr\n2,1,1,0.10000000000000001,0.5,0.25\n");
}

TEST(Duality, SingleCreationMultiplicity) {
  // phi_{N,E} with E a small symmetric neighbourhood of the root, probed at
  // the endpoint of a one-creation trajectory without recollisions
  Engine g = make_engine(73);
  const std::size_t N = 9;
  std::size_t checked = 0;
  for (int n = 0; n < 400 && checked < 100; ++n) {
    const std::size_t s = 1 + static_cast<std::size_t>(n % 2);
    const auto pt = random_pt(g, s, 1, 1.5, 2, 0.3, 0.7);
    if (!pt.recollision_free()) continue;
    const auto& z = pt.endpoint();
    if (flow(z, pt.horizon).events.size() != 1) continue;
    const Configuration root = pt.root;
    ObservableSpec sp;
    sp.N = N;
    sp.levels.emplace(s, LevelFunction::indicator([root](const Configuration& y) {
      std::vector<std::size_t> sigma(y.count());
      std::iota(sigma.begin(), sigma.end(), 0);
      do {
        if (max_abs_diff(permuted(y, sigma), root) < 1e-6) return true;
      } while (std::next_permutation(sigma.begin(), sigma.end()));
      return false;
    }));
    const BigInt v = evaluate_exact(sp, pt.horizon, z);
    const int sign = pt.kernel[0].gain ? 1 : -1;
    EXPECT_EQ(v, BigInt(sign) * BigInt(N - s));
    ++checked;
  }
  EXPECT_GT(checked, 50u);
}
