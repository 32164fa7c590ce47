#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "hslab/boltzmann/dsmc.hpp"
#include "hslab/boltzmann/series.hpp"

using namespace hslab;

namespace {

Vec v2(double a, double b) { return Vec{{a, b, 0.0}}; }

std::vector<Vec> bimodal(std::size_t n, std::uint64_t seed) {
  Engine g = make_engine(seed);
  std::vector<Vec> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = v2(i % 2 ? 1.0 : -1.0, 0.0) + gaussian_vec(g, 2, 0.1);
  return v;
}

// Fourth-moment gap trajectory of a homogeneous run.
std::vector<double> relaxation_curve(std::size_t n, std::uint64_t seed, int outputs, double every) {
  DsmcOptions opt;
  opt.seed = seed;
  KineticSolution sol = make_homogeneous_solution(bimodal(n, seed + 1000), opt);
  std::vector<double> gaps{moments(sol).fourth_gap};
  for (int k = 0; k < outputs; ++k) {
    for (int j = 0; j < 10; ++j) dsmc_step(sol, every / 10);
    gaps.push_back(moments(sol).fourth_gap);
  }
  return gaps;
}

}  // namespace

TEST(Dsmc, MaxwellianIsInvariant) {
  DsmcOptions opt;
  opt.seed = 3;
  KineticSolution sol = make_homogeneous_solution(maxwellian_sample(20000, 2, 1.0, 11), opt);
  const Moments m0 = moments(sol);
  double max_e = 0.0, max_p = 0.0;
  for (int step = 0; step < 1000; ++step) {
    const DsmcStats st = dsmc_step(sol, 0.01);
    max_e = std::max(max_e, st.max_energy_error);
    max_p = std::max(max_p, st.max_momentum_error);
  }
  const Moments m1 = moments(sol);
  EXPECT_GT(sol.collisions, 100000u);
  EXPECT_LT(std::abs(m1.energy - m0.energy) / m0.energy, 1e-3);
  EXPECT_LT(norm(m1.momentum - m0.momentum), 1e-3);
  EXPECT_NEAR(m1.mass, 1.0, 1e-6);
  // the kurtosis gap of a 2D Maxwellian sample has sd about 0.03 at n = 2e4
  EXPECT_LT(std::abs(m1.fourth_gap), 0.1);
  EXPECT_LT(max_e, 1e-12);
  EXPECT_LT(max_p, 1e-12);
}

TEST(Dsmc, CollisionFrequencyMatchesMaxwellianRate) {
  // nu = (c_d / ell) E|v - v2|, |v - v2| Rayleigh with scale sqrt(2T)
  for (double ell : {1.0, 2.0}) {
    DsmcOptions opt;
    opt.seed = 5;
    opt.ell = ell;
    KineticSolution sol = make_homogeneous_solution(maxwellian_sample(20000, 2, 1.0, 12), opt);
    std::size_t c = 0;
    for (int k = 0; k < 200; ++k) c += dsmc_step(sol, 0.01).collisions;
    const double nu = 2.0 * static_cast<double>(c) / (20000.0 * 2.0);
    const double expected = 2.0 / ell * std::sqrt(2.0) * std::sqrt(std::numbers::pi / 2.0);
    EXPECT_NEAR(nu / expected, 1.0, 0.02) << ell;
  }
}

TEST(Dsmc, PerEventConservationInspace) {
  DsmcOptions opt;
  opt.seed = 8;
  opt.cell_size = 0.4;
  KineticSolution sol = make_kinetic_solution(DensitySpec::reference(2), 20000, opt);
  const Moments m0 = moments(sol);
  double max_e = 0.0, max_p = 0.0;
  for (int k = 0; k < 20; ++k) {
    const DsmcStats st = dsmc_step(sol, 0.02);
    max_e = std::max(max_e, st.max_energy_error);
    max_p = std::max(max_p, st.max_momentum_error);
  }
  EXPECT_GT(sol.collisions, 0u);
  EXPECT_LT(max_e, 1e-13);
  EXPECT_LT(max_p, 1e-13);
  const Moments m1 = moments(sol);
  EXPECT_NEAR(m1.energy, m0.energy, 1e-12);
  EXPECT_LT(norm(m1.momentum - m0.momentum), 1e-12);
  EXPECT_GT(sol.underoccupied_warnings, 0u);  // the Gaussian tails are sparse
}

TEST(Dsmc, RejectsLongSteps) {
  DsmcOptions opt;
  KineticSolution sol = make_homogeneous_solution(maxwellian_sample(2000, 2, 1.0, 1), opt);
  EXPECT_THROW(dsmc_step(sol, 1.0), InvalidArgument);
  EXPECT_THROW(dsmc_step(sol, 0.0), InvalidArgument);
  opt.check_dt = false;
  KineticSolution loose = make_homogeneous_solution(maxwellian_sample(2000, 2, 1.0, 1), opt);
  EXPECT_NO_THROW(dsmc_step(loose, 1.0));
}

TEST(Dsmc, ScatteringNormalDensity) {
  // E[omega.e] under [omega.e]_+ is (pi/4) in 2D and 2/3 in 3D
  Engine g = make_engine(2);
  for (int d : {2, 3}) {
    const Vec e = d == 2 ? v2(0.6, 0.8) : Vec{{0.0, 0.6, 0.8}};
    double s = 0.0;
    const int n = 200000;
    for (int k = 0; k < n; ++k) {
      const Vec w = detail::scattering_normal(g, e * 3.0, d);
      ASSERT_NEAR(norm(w), 1.0, 1e-12);
      ASSERT_GE(dot(w, e), 0.0);
      s += dot(w, e);
    }
    const double expected = d == 2 ? std::numbers::pi / 4.0 : 2.0 / 3.0;
    EXPECT_NEAR(s / n, expected, 3e-3) << d;
  }
}

TEST(Dsmc, BimodalRelaxationAtTwoParticleCounts) {
  const int outputs = 15;
  const double every = 0.2;
  std::vector<std::vector<double>> small, large;
  for (std::uint64_t r = 0; r < 4; ++r) {
    small.push_back(relaxation_curve(4000, 100 + r, outputs, every));
    large.push_back(relaxation_curve(16000, 200 + r, outputs, every));
  }
  for (const auto& c : large) {
    std::vector<double> mag;
    for (double a : c) mag.push_back(std::abs(a));
    EXPECT_LT(kendall_trend(mag), -0.9);
    EXPECT_LT(std::abs(c.back()), 0.5 * std::abs(c.front()));
  }
  for (int k : {3, 8, outputs}) {
    std::vector<double> a, b;
    for (int r = 0; r < 4; ++r) {
      a.push_back(small[static_cast<std::size_t>(r)][static_cast<std::size_t>(k)]);
      b.push_back(large[static_cast<std::size_t>(r)][static_cast<std::size_t>(k)]);
    }
    const Estimate ea = mean_estimate(a), eb = mean_estimate(b);
    EXPECT_LT(std::abs(ea.value - eb.value), 3.0 * std::hypot(ea.stderr_, eb.stderr_) + 0.01) << k;
  }
}

TEST(Evaluate, MatchesAnalyticDataWithinBias) {
  DsmcOptions opt;
  opt.seed = 21;
  for (const DensitySpec& spec : {DensitySpec::reference(2), example_family(100, 2)}) {
    KineticSolution sol = make_kinetic_solution(spec, 40000, opt);
    dsmc_run(sol, 0.05, {0.0});
    EvaluateOptions raw;
    raw.control_variate = false;
    for (const auto& [x, v] : {std::pair{v2(0.0, 0.0), v2(0.0, 0.0)}, std::pair{v2(-0.7, 0.3), v2(0.5, -0.4)},
                               std::pair{v2(0.4, -1.1), v2(-1.2, 0.2)}}) {
      const FValue f = evaluate_f(sol, 0.0, x, v, raw);
      const double exact = density(spec, x, v);
      EXPECT_LT(std::abs(f.raw - exact), 2.0 * std::abs(f.bias) + 4.0 * f.stderr_) << exact;
      // the control variate is exact at t = 0
      EXPECT_NEAR(evaluate_f(sol, 0.0, x, v).value, exact, 1e-14);
    }
  }
}

TEST(Evaluate, RefinementConsistency) {
  DsmcOptions opt;
  opt.seed = 31;
  opt.cell_size = 0.4;
  KineticSolution coarse = make_kinetic_solution(DensitySpec::reference(2), 20000, opt);
  KineticSolution fine = make_kinetic_solution(DensitySpec::reference(2), 40000, opt);
  dsmc_run(coarse, 0.05, {0.0, 0.3});
  dsmc_run(fine, 0.05, {0.0, 0.3});
  for (double t : {0.0, 0.3}) {
    for (bool cv : {false, true}) {
      for (const auto& [x, v] : {std::pair{v2(0.1, 0.0), v2(0.0, 0.2)}, std::pair{v2(-0.6, 0.5), v2(0.7, -0.3)}}) {
        EvaluateOptions a;
        a.control_variate = cv;
        const FValue fa = evaluate_f(coarse, t, x, v, a);
        EvaluateOptions b = a;
        b.bandwidth = 0.5 * fa.bandwidth;
        const FValue fb = evaluate_f(fine, t, x, v, b);
        EXPECT_LT(std::abs(fb.raw - fa.raw), 2.0 * std::abs(fa.bias) + 3.0 * std::hypot(fa.stderr_, fb.stderr_))
            << t << ' ' << cv;
      }
    }
  }
}

TEST(Evaluate, NormalizationNonnegativityAndTensorPower) {
  DsmcOptions opt;
  opt.seed = 41;
  opt.cell_size = 0.4;
  KineticSolution sol = make_kinetic_solution(example_family(50, 2), 20000, opt);
  dsmc_run(sol, 0.05, {0.0, 0.5});
  const auto& out = output_at(sol, 0.5);
  EXPECT_NEAR(out.mass, 1.0, 1e-6);
  EXPECT_GT(out.bandwidth, 0.0);
  EXPECT_GT(out.envelope_constant, 0.0);
  EXPECT_GT(out.envelope_beta, 0.0);

  // proposal: even mixture of a wide Gaussian and the freely transported data
  Engine g = make_engine(9);
  const double sx = 1.3, sv = 1.1;
  const DensitySpec wide = DensitySpec::gaussian(2, sx, sv);
  std::vector<double> w;
  for (int n = 0; n < 12000; ++n) {
    Vec x, v;
    if (n % 2) {
      x = gaussian_vec(g, 2, sx);
      v = gaussian_vec(g, 2, sv);
    } else {
      std::tie(x, v) = sample_particle(*sol.initial, g);
      x += v * 0.5;
    }
    const double q = 0.5 * density(wide, x, v) + 0.5 * density(*sol.initial, x - v * 0.5, v);
    const FValue f = evaluate_f(sol, 0.5, x, v);
    ASSERT_GE(f.value, 0.0);
    w.push_back(f.value / q);
  }
  const Estimate e = mean_estimate(w);
  EXPECT_NEAR(e.value, 1.0, 1e-2);
  EXPECT_LT(e.stderr_, 5e-3);

  Configuration z(2, 0.01);
  z.push_back(v2(0.2, 0.1), v2(0.3, 0.0));
  EXPECT_EQ(tensor_power(sol, 0.5, z), evaluate_f(sol, 0.5, z.x[0], z.v[0]).value);
  z.push_back(v2(-0.5, 0.4), v2(0.0, -0.6));
  EXPECT_DOUBLE_EQ(tensor_power(sol, 0.5, z), evaluate_f(sol, 0.5, z.x[0], z.v[0]).value *
                                                   evaluate_f(sol, 0.5, z.x[1], z.v[1]).value);
}

TEST(Evaluate, ExtrapolationIsAnError) {
  DsmcOptions opt;
  KineticSolution sol = make_kinetic_solution(DensitySpec::reference(2), 2000, opt);
  dsmc_run(sol, 0.05, {0.0, 0.2});
  EXPECT_NO_THROW(evaluate_f(sol, 0.2, Vec{}, Vec{}));
  EXPECT_THROW(evaluate_f(sol, 0.3, Vec{}, Vec{}), ExtrapolationError);
  EXPECT_THROW(evaluate_f(sol, 0.1, Vec{}, Vec{}), ExtrapolationError);
  EXPECT_THROW(dsmc_run(sol, 0.05, {0.1}), InvalidArgument);
}

TEST(Series, FreeTransportAndDegenerateCases) {
  Configuration z(2, 0.0);
  z.push_back(v2(0.3, -0.2), v2(0.5, 0.1));
  const auto data = tensorized(DensitySpec::reference(2), false);
  DuhamelOptions opt;
  opt.depth = 0;
  const auto f = boltzmann_point_value(1.0, 0.7, z, data, opt);
  EXPECT_DOUBLE_EQ(f.value, reference_density(2, v2(0.3 - 0.35, -0.2 - 0.07), v2(0.5, 0.1)));

  // huge mean free path: collision terms vanish
  opt.depth = 2;
  opt.samples = 2000;
  const auto g = boltzmann_point_value(1e9, 0.7, z, data, opt);
  EXPECT_NEAR(g.value, f.value, 1e-8);
}

TEST(Series, BoltzmannPseudoTrajectory) {
  Configuration root(2, 0.0);
  root.push_back(v2(0.0, 0.0), v2(1.0, 0.0));
  // gain branch: omega.(v_new - v_parent) > 0
  const std::vector<CreationRecord> gain{{0.5, v2(2.0, 0.0), v2(1.0, 0.0), 0}};
  const auto bp = build_boltzmann(root, 1.0, gain);
  ASSERT_EQ(bp.endpoint.count(), 2u);
  EXPECT_NEAR(bp.kernel_product(), 1.0, 1e-15);
  EXPECT_TRUE(bp.kernel[0].gain);
  // parent and child exchange velocities head-on, then both sit at -0.5 + ...
  EXPECT_NEAR(bp.endpoint.v[0][0], 2.0, 1e-15);
  EXPECT_NEAR(bp.endpoint.v[1][0], 1.0, 1e-15);
  EXPECT_NEAR(bp.endpoint.x[0][0], -0.5 - 1.0, 1e-15);
  EXPECT_NEAR(bp.endpoint.x[1][0], -0.5 - 0.5, 1e-15);
  const std::vector<CreationRecord> loss{{0.5, v2(0.0, 0.0), v2(1.0, 0.0), 0}};
  const auto bl = build_boltzmann(root, 1.0, loss);
  EXPECT_NEAR(bl.kernel_product(), -1.0, 1e-15);
  EXPECT_EQ(bl.endpoint.v[0], v2(1.0, 0.0));
}

TEST(Series, PairedSeriesSharesRandomNumbers) {
  const auto spec = DensitySpec::gaussian(2, 0.6, 1.0);
  Configuration z(2, 0.05);
  z.push_back(v2(0.1, 0.2), v2(0.4, -0.3));
  DuhamelOptions opt;
  opt.depth = 2;
  opt.samples = 3000;
  opt.seed = 17;
  const std::size_t N = 20;
  const double ell = 1.0 / (N * 0.05);
  const auto p = paired_point_values(N, ell, 0.5, z, tensorized(spec), tensorized(spec, false), opt);
  const auto fn = duhamel_point_value(N, 0.5, z, tensorized(spec), opt);
  const auto f0 = boltzmann_point_value(ell, 0.5, z, tensorized(spec, false), opt);
  EXPECT_DOUBLE_EQ(p.finite.value, fn.value);
  EXPECT_NEAR(p.limit.value, f0.value, 1e-12 * std::abs(f0.value));
  EXPECT_NEAR(p.difference.value, p.finite.value - p.limit.value, 1e-12);
  // common random numbers make the difference cheaper than either series
  EXPECT_LT(p.difference.terms[1].stderr_, p.limit.terms[1].stderr_);
}

TEST(Series, AgreesWithDsmc) {
  // a Maxwellian bump on a Maxwellian background is out of local equilibrium
  const auto spec = example_family(10, 2, 1.0, 5.0);
  const double r = bump_radius(spec);
  DsmcOptions opt;
  opt.seed = 51;
  opt.cell_size = 0.15;
  const double t = 0.4;
  KineticSolution sol = make_kinetic_solution(spec, 80000, opt);
  dsmc_run(sol, 0.01, {t});
  DuhamelOptions dopt;
  dopt.depth = 3;
  dopt.samples = 200000;
  dopt.seed = 5;
  for (const auto& [x, v] : {std::pair{v2(r, 0.0), v2(0.0, 0.0)}, std::pair{v2(r - 0.3, 0.0), v2(0.0, 0.3)}}) {
    Configuration z(2, 0.0);
    z.push_back(x, v);
    const auto series = boltzmann_point_value(1.0, t, z, tensorized(spec, false), dopt);
    const FValue f = evaluate_f(sol, t, x, v);
    const double collisional = series.value - series.terms[0].value;
    const double truncation = std::abs(series.terms.back().value);
    const double tol = 4.0 * std::hypot(series.stderr_, f.stderr_) + std::abs(f.bias) + truncation;
    EXPECT_LT(std::abs(series.value - f.raw), tol) << series.value << ' ' << f.raw;
    // at the bump centre the check is not vacuous: collisions move f by more
    // than the tolerance
    if (x == v2(r, 0.0)) {
      EXPECT_GT(std::abs(collisional), tol) << collisional;
    }
  }
}
