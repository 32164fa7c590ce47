#include <gtest/gtest.h>

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "hslab/chaos/duality.hpp"
#include "hslab/chaos/experiment.hpp"
#include "support.hpp"

using namespace hslab;
using hslab::testing::random_cluster;

namespace {

Vec v2(double a, double b) { return Vec{{a, b, 0.0}}; }

Configuration pair(const Vec& x1, const Vec& v1, const Vec& x2, const Vec& v2_, double eps = 0.1) {
  Configuration z(2, eps);
  z.push_back(x1, v1);
  z.push_back(x2, v2_);
  return z;
}

double gauss_weight(const Configuration& z) { return std::exp(-(energy(z) + inertia(z))); }

}  // namespace

TEST(Sets, IndicatorU) {
  Configuration one(2, 0.1);
  one.push_back(Vec{}, Vec{});
  EXPECT_TRUE(indicator_U(one, 10.0));
  EXPECT_TRUE(indicator_U(pair(v2(0, 0), v2(1, 0), v2(1, 0), v2(-1, 0)), 0.5));
  EXPECT_FALSE(indicator_U(pair(v2(0, 0), v2(1, 0), v2(1, 0), v2(1, 0)), 1e-9));
  EXPECT_FALSE(indicator_U(pair(v2(0, 0), v2(1, 0), v2(1, 0), v2(-1, 0)), 2.0));
}

TEST(Sets, IndicatorK) {
  // equal velocities: constant separation
  EXPECT_TRUE(indicator_K(pair(v2(0, 0), v2(1, 0), v2(0.5, 0), v2(1, 0))));
  // approaching now, so separating in the past
  EXPECT_TRUE(indicator_K(pair(v2(0, 0), v2(1, 0), v2(1, 0), v2(-1, 0))));
  // separating now: the backward extrapolation overlaps
  EXPECT_FALSE(indicator_K(pair(v2(0, 0), v2(-1, 0), v2(1, 0), v2(1, 0))));
  // separating but offset by more than eps
  EXPECT_TRUE(indicator_K(pair(v2(0, 0), v2(-1, 0), v2(1, 0.5), v2(1, 0))));
}

TEST(Sets, FiltersArePermutationInvariant) {
  Engine g = make_engine(4);
  std::size_t kt = 0, ut = 0;
  for (int n = 0; n < 500; ++n) {
    const Configuration z = random_cluster(g, 4, 2, 0.2, 0.6, 1.0);
    std::vector<std::size_t> p{0, 1, 2, 3};
    const bool k0 = indicator_K(z), u0 = indicator_U(z, 0.5);
    kt += k0;
    ut += u0;
    do {
      const Configuration q = permuted(z, p);
      ASSERT_EQ(indicator_K(q), k0);
      ASSERT_EQ(indicator_U(q, 0.5), u0);
    } while (std::next_permutation(p.begin(), p.end()));
  }
  // both outcomes occur
  EXPECT_GT(kt, 0u);
  EXPECT_LT(kt, 500u);
  EXPECT_GT(ut, 0u);
  EXPECT_LT(ut, 500u);
}

TEST(Seminorm, ZeroOracle) {
  for (std::size_t k : {0u, 1u}) {
    const SeminormSpec sp{0.1, 2, k, 0.1, 1.0, 2.0, 2};
    SeminormOptions o;
    o.mc_budget = 2000;
    const auto e = seminorm([](const Configuration&) { return 0.0; }, sp, o);
    EXPECT_EQ(e.estimate, 0.0);
    EXPECT_EQ(e.stderr_, 0.0);
  }
}

TEST(Seminorm, ConstantOracleMatchesRejection) {
  const SeminormSpec sp{0.1, 2, 0, 0.3, 1.0, 1.5, 2};
  const auto c = [](const Configuration&) { return 0.7; };
  SeminormOptions o;
  o.mc_budget = 100000;
  o.seed = 3;
  const auto a = seminorm(c, sp, o);
  const auto b = seminorm_by_rejection(c, sp, 400000, 4);
  EXPECT_GT(a.estimate, 0.0);
  EXPECT_LT(std::abs(a.estimate - b.estimate), 3.0 * std::hypot(a.stderr_, b.stderr_))
      << a.estimate << ' ' << b.estimate;
}

TEST(Seminorm, SingleParticleIsRestrictedL1) {
  // int_{|z|^2 <= 2R^2} f0 = P(chi2_{2d} <= 2R^2)
  const SeminormSpec sp{0.01, 1, 0, 0.0, 1.0, 1.2, 2};
  SeminormOptions o;
  o.mc_budget = 50000;
  const auto e = seminorm([](const Configuration& z) { return reference_density(2, z.x[0], z.v[0]); }, sp, o);
  const double exact = boost::math::gamma_p(2.0, 1.44);
  EXPECT_LT(std::abs(e.estimate - exact), 3.0 * e.stderr_) << e.estimate << ' ' << exact;
}

TEST(Seminorm, FirstOrderMatchesIndicatorRoute) {
  // eps^{k(d-1)} times the seminorm of exp(-(E+I)) with no U, K or energy
  // restriction is the V-measure; for s = 2, k = 1 every V member is in K and
  // V = W, so the Gaussian-indicator route is an independent oracle
  const double eps = 0.2;
  const SeminormSpec sp{eps, 2, 1, 0.0, 1.0, 50.0, 2};
  SeminormOptions o;
  o.mc_budget = 40000;
  o.sigma = 1.0;
  o.seed = 5;
  const auto sem = seminorm(gauss_weight, sp, o);
  MeasureOptions mo;
  mo.s = 2;
  mo.k = 1;
  mo.T = 1.0;
  mo.epsilon = eps;
  mo.samples = 400000;
  mo.seed = 6;
  mo.route = MeasureRoute::indicator_w;
  const auto ind = singular_measure_estimate(mo);
  EXPECT_LT(std::abs(sem.estimate * eps - ind.estimate), 3.0 * std::hypot(sem.stderr_ * eps, ind.stderr_))
      << sem.estimate * eps << ' ' << ind.estimate;
}

TEST(Seminorm, BoundHomogeneityTriangle) {
  const auto f = [](const Configuration& z) { return std::sin(3.0 * z.x[0][0]) * std::exp(-energy(z)); };
  const auto g = [](const Configuration& z) { return std::cos(z.v[1][1] + z.x[0][1]); };
  for (std::size_t k : {0u, 1u}) {
    const SeminormSpec sp{0.1, 2, k, 0.2, 1.0, 2.0, 2};
    SeminormOptions o;
    o.mc_budget = 5000;
    o.seed = 11;
    const auto C = seminorm_constant(sp, o);
    const auto nf = seminorm(f, sp, o);
    const auto ng = seminorm(g, sp, o);
    const auto nfg = seminorm([&](const Configuration& z) { return f(z) + g(z); }, sp, o);
    const auto n3f = seminorm([&](const Configuration& z) { return -3.0 * f(z); }, sp, o);
    EXPECT_GT(C.estimate, 0.0);
    // |f|, |g| <= 1, and the shared seed makes the comparisons sample-wise
    EXPECT_LE(nf.estimate, C.estimate * (1.0 + 1e-12)) << k;
    EXPECT_LE(ng.estimate, C.estimate * (1.0 + 1e-12)) << k;
    EXPECT_LE(nfg.estimate, (nf.estimate + ng.estimate) * (1.0 + 1e-12)) << k;
    EXPECT_NEAR(n3f.estimate, 3.0 * nf.estimate, 1e-12 * nf.estimate) << k;
    std::cout << "C(s=2,k=" << k << ",T'=1,R=2) = " << C.estimate << " +- " << C.stderr_ << '\n';
  }
}

TEST(Seminorm, UnreliableOracle) {
  const SeminormSpec sp{0.1, 1, 0, 0.0, 1.0, 2.0, 2};
  SeminormOptions o;
  o.mc_budget = 4000;
  std::atomic<int> calls{0};
  const auto flaky = [&](const Configuration&) -> double {
    if (++calls % 10 == 0) throw DegenerateConfiguration("probe");
    return 1.0;
  };
  EXPECT_THROW(seminorm(flaky, sp, o), UnreliableOracle);
  const auto rare = [](const Configuration& z) -> double {
    if (z.x[0][0] > 2.6) throw DegenerateConfiguration("probe");
    return 1.0;
  };
  const auto e = seminorm(rare, sp, o);
  EXPECT_GT(e.oracle_failures, 0u);
  EXPECT_THROW(seminorm(rare, SeminormSpec{0.1, 2, 2, 0.0, 1.0, 2.0, 2}, o), InvalidArgument);
}

TEST(Duality, AllOnesIsConserved) {
  BracketSpec b;
  b.observable = all_ones_spec(3, 3);
  b.data = DensitySpec::gaussian(2, 0.5, 1.0);
  b.ell = 2.0;
  b.runs = 300;
  const auto r = duality_residual(b, 0.7);
  EXPECT_NEAR(r.lhs, 1.0 + 0.5 + 1.0 / 6.0, 1e-12);
  EXPECT_NEAR(r.residual, 0.0, 1e-12);
}

TEST(Duality, TimeZeroIsIdentical) {
  BracketSpec b;
  b.observable.N = 3;
  b.observable.level_cap = 3;
  b.observable.levels.emplace(1, LevelFunction::indicator([](const Configuration& z) { return z.v[0][0] > 0.2; }));
  b.data = DensitySpec::gaussian(2, 0.5, 1.0);
  b.runs = 200;
  const auto r = duality_residual(b, 0.0);
  EXPECT_EQ(r.residual, 0.0);
  EXPECT_EQ(r.lhs, r.rhs);
}

TEST(Duality, IndicatorObservableThreeParticles) {
  BracketSpec b;
  b.observable.N = 3;
  b.observable.level_cap = 3;
  b.observable.levels.emplace(
      1, LevelFunction::indicator([](const Configuration& z) { return z.v[0][0] > 0.0 && z.x[0][0] > 0.0; }));
  b.data = DensitySpec::gaussian(2, 0.3, 1.0, v2(-0.3, 0.0), v2(0.8, 0.0));
  b.ell = 0.5;
  b.runs = 20000;
  b.seed = 9;
  const auto r = duality_residual(b, 0.4);
  EXPECT_LE(std::abs(r.residual), 3.0 * r.stderr_) << r.lhs << ' ' << r.rhs << ' ' << r.stderr_;
  // the observable really evolves: its value moves away from the t = 0 bracket
  const auto r0 = duality_residual(b, 0.0);
  EXPECT_GT(std::abs(r.lhs - r0.lhs), 3.0 * r.stderr_);
}

TEST(Chaos, LanfordWindowMatchesMaxwellianRate) {
  // nu = c_d / ell int rho^2 E|v - v2| = 2 (1 / 4 pi) sqrt(pi) for the reference data
  const auto w = lanford_window(DensitySpec::reference(2), 1.0, 200000, 3);
  const double nu = 2.0 / (4.0 * std::numbers::pi) * std::sqrt(std::numbers::pi);
  EXPECT_NEAR(w.nu / nu, 1.0, 0.05);
  EXPECT_NEAR(w.T_L, 0.5 / w.nu, 1e-12);
  EXPECT_GT(w.C_d, 0.0);
}

TEST(Chaos, InitialSeminormMatchesClosedForm) {
  ChaosConfig cfg;
  cfg.mc_budget = 20000;
  for (std::size_t N : {128u, 4096u}) {
    const ChaosRow row = chaos_cell(cfg, N, 0.0);
    const double exact = chaos_initial_closed_form(example_family(N, 2, cfg.h0, cfg.c0), cfg.R);
    EXPECT_LT(std::abs(row.seminorm - exact), 3.0 * row.stderr_ + 1e-12) << N << ' ' << row.seminorm << ' ' << exact;
    EXPECT_EQ(row.flag, "ok");
    EXPECT_GE(row.sup_gap, 0.5 * cfg.h0);
  }
}

TEST(Chaos, InitialTrendDecreases) {
  ChaosConfig cfg;
  cfg.mc_budget = 4000;
  cfg.times = {0.0};
  std::vector<ChaosRow> rows;
  for (std::size_t N : cfg.Ns) rows.push_back(chaos_cell(cfg, N, 0.0));
  EXPECT_GE(chaos_decrease_tau(rows, 0.0), 0.6);
}

TEST(Chaos, EvolvedCellIsDeterministic) {
  ChaosConfig cfg;
  cfg.mc_budget = 300;
  cfg.inner_samples = 100;
  cfg.sup_samples = 4000;
  cfg.depth = 2;
  const ChaosRow a = chaos_cell(cfg, 256, 0.4);
  const ChaosRow b = chaos_cell(cfg, 256, 0.4);
  std::ostringstream sa, sb;
  write_chaos_row(sa, a);
  write_chaos_row(sb, b);
  EXPECT_EQ(sa.str(), sb.str());
  EXPECT_GT(a.seminorm, 0.0);
  EXPECT_EQ(a.n_depth, 2u);
  EXPECT_GE(a.sup_gap, 0.5 * cfg.h0);
  std::ostringstream h;
  write_chaos_header(h);
  EXPECT_EQ(h.str().substr(0, 66), "N,epsilon,ell,s,k,eta,Tprime,R,t,n_depth,seminorm,stderr,flag,seed");
}

TEST(Chaos, VelocityReversalLeavesV) {
  const auto r = reversal_rates(2, 1, 1.0, 0.1, 2, 400, 7);
  EXPECT_EQ(r.members, 400u);
  EXPECT_GT(r.forward, 0.99);
  EXPECT_LT(r.reversed, 0.5 * r.forward);
}
