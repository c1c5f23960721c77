#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "alignlab/diagnostics.hpp"
#include "alignlab/dynamics.hpp"
#include "alignlab/errors.hpp"
#include "alignlab/simulation.hpp"
#include "oracles.hpp"

using namespace alignlab;

namespace {

constexpr double kPi = std::numbers::pi;

Dynamics make_dynamics(std::size_t n, KernelFamily family = KernelFamily::inverse_linear) {
  return Dynamics(compute_symbol(KernelSpec::make(family), n));
}

// rho0 = 1 + 0.5 cos x, u0 = -sin x: a bump that actually moves.
ICSpec moving() { return ICSpec::custom({1, 0.5}, {0, 0, -1}); }

ICSpec random_ic(oracle::Gen& gen, int modes) {
  auto rho = gen.coefficients(modes, 0.3);
  double sum = 0;
  for (std::size_t i = 1; i < rho.size(); ++i) sum += std::abs(rho[i]);
  rho[0] = sum + gen.uniform(0.2, 1.5);
  return ICSpec::custom(rho, gen.coefficients(modes, 0.5));
}

SimState advance(const Dynamics& d, SimState s, double dt, int steps) {
  for (int i = 0; i < steps; ++i) s = d.step(s, dt);
  return s;
}

TorusField reflect(const TorusField& g) {
  const std::size_t n = g.size();
  TorusField out = g;
  for (std::size_t j = 0; j < n; ++j) out[j] = g[(n - j) % n];
  return out;
}

}  // namespace

TEST_CASE("initial states of the presets") {
  const auto d = make_dynamics(128);
  const double l1 = d.symbol().lambda[1];

  const auto flat = d.init_state(ICSpec::flat());
  CHECK(flat.g.max_abs() <= 1e-14);
  CHECK(flat.u.max_abs() <= 1e-14);
  CHECK(flat.kappa == doctest::Approx(1.0));

  const auto shear = d.init_state(ICSpec::shear());
  const auto minus_cos = TorusField::sample(128, [](double x) { return -std::cos(x); });
  CHECK((shear.g - minus_cos).max_abs() <= 1e-13);
  CHECK(std::abs(shear.nu) <= 1e-15);
  CHECK(std::abs(shear.p0) <= 1e-13);

  const auto bump = d.init_state(ICSpec::bump());
  CHECK((bump.g - 0.5 * l1 * minus_cos).max_abs() <= 1e-12 * l1);
  CHECK(bump.u.max_abs() <= 1e-14);

  const auto sc = d.init_state(ICSpec::supercritical(3));
  CHECK((sc.g - 3.0 * minus_cos).max_abs() <= 1e-12);

  const auto drift = d.init_state(ICSpec::custom({2}, {0.75}));
  CHECK(drift.p0 == doctest::Approx(2 * kPi * 2 * 0.75));
  CHECK((drift.u - TorusField::constant(128, 0.75)).max_abs() <= 1e-14);
}

TEST_CASE("nonpositive initial density is rejected") {
  const auto d = make_dynamics(64);
  CHECK_THROWS(d.init_state(ICSpec::custom({0.5, 1.0}, {0})));
  CHECK_THROWS(d.init_state(TorusField::constant(64, 0.0), TorusField::zeros(64)));
  CHECK_THROWS(d.init_state(TorusField::constant(64, 1.0), TorusField::zeros(32)));
}

TEST_CASE("velocity recovery examples") {
  const auto d = make_dynamics(128);
  const double l1 = d.symbol().lambda[1];
  const auto rho = TorusField::sample(128, [](double x) { return 1 + 0.5 * std::cos(x); });
  const auto u = TorusField::sample(128, [l1](double x) { return 0.5 * l1 * std::sin(x); });
  const auto s = d.init_state(rho, u);
  CHECK(s.g.max_abs() <= 1e-12 * l1);
  CHECK((d.recover_velocity(s) - u).max_abs() <= 1e-12 * l1);
  CHECK((recover_velocity(s, d.symbol()) - u).max_abs() <= 1e-12 * l1);
}

TEST_CASE("property: recovery inverts initialization") {
  oracle::Gen gen(101);
  const auto d = make_dynamics(128, KernelFamily::log_damped);
  for (int trial = 0; trial < 20; ++trial) {
    const auto ic = random_ic(gen, 6);
    const auto [rho0, u0] = sample_initial_data(ic, 128);
    const auto s = d.init_state(rho0, u0);
    CHECK((d.recover_velocity(s) - u0).max_abs() <= 1e-10 * (1 + u0.max_abs()));
    CHECK(d.consistency_residual(s) <= 1e-9 * (1 + s.g.max_abs()));
  }
}

TEST_CASE("rhs of the shear state") {
  const auto d = make_dynamics(128);
  const auto s = d.init_state(ICSpec::shear());
  const auto [drho, dg] = d.rhs(s);
  const auto cos1 = TorusField::sample(128, [](double x) { return std::cos(x); });
  const auto cos2 = TorusField::sample(128, [](double x) { return -std::cos(2 * x); });
  CHECK((drho - cos1).max_abs() <= 1e-12);
  CHECK((dg - cos2).max_abs() <= 1e-12);
  const auto [frho, fg] = d.rhs(d.init_state(ICSpec::flat()));
  CHECK(frho.max_abs() <= 1e-15);
  CHECK(fg.max_abs() <= 1e-15);
}

TEST_CASE("property: rhs is mean-free") {
  oracle::Gen gen(103);
  const auto d = make_dynamics(128);
  for (int trial = 0; trial < 20; ++trial) {
    const auto s = d.init_state(random_ic(gen, 8));
    const auto [drho, dg] = d.rhs(s);
    CHECK(std::abs(drho.mean()) <= 1e-14 * (1 + drho.max_abs()));
    CHECK(std::abs(dg.mean()) <= 1e-14 * (1 + dg.max_abs()));
  }
}

TEST_CASE("flat state is a fixed point of the step") {
  const auto d = make_dynamics(64);
  const auto s0 = d.init_state(ICSpec::flat());
  const auto s1 = advance(d, s0, 0.1, 10);
  CHECK((s1.rho - s0.rho).max_abs() <= 1e-15);
  CHECK(s1.g.max_abs() <= 1e-15);
  CHECK(s1.t == doctest::Approx(1.0));
  CHECK(s1.steps == 10);
}

TEST_CASE("SSP-RK3 local and global error ratios") {
  const auto d = make_dynamics(128);
  const auto s0 = d.init_state(moving());

  auto local = [&](double dt) { return (d.step(s0, dt).rho - advance(d, s0, dt / 2, 2).rho).max_abs(); };
  const double l1 = local(0.02), l2 = local(0.01);
  CHECK(l1 / l2 == doctest::Approx(16).epsilon(0.25));

  const auto ref = advance(d, s0, 0.00125, 400).rho;
  const double g1 = (advance(d, s0, 0.01, 50).rho - ref).max_abs();
  const double g2 = (advance(d, s0, 0.005, 100).rho - ref).max_abs();
  const double g3 = (advance(d, s0, 0.0025, 200).rho - ref).max_abs();
  // The reference carries error of order g3 / 8.
  CHECK(std::log2(g1 / g2) == doctest::Approx(3).epsilon(0.1));
  CHECK(std::log2(g2 / g3) >= 2.7);
}

TEST_CASE("mean density, mean G and momentum are conserved step by step") {
  const auto d = make_dynamics(128);
  auto s = d.init_state(moving());
  const double kappa = s.kappa, nu = s.nu, p0 = d.momentum(s);
  for (int i = 1; i <= 100; ++i) {
    s = d.step(s, d.adaptive_dt(s, 0.4, 0.1));
    CHECK(std::abs(s.rho.mean() - kappa) <= 1e-13 * i);
    CHECK(std::abs(s.g.mean() - nu) <= 1e-13 * i);
    CHECK(std::abs(d.momentum(s) - p0) <= 1e-12 * (1 + std::abs(p0)));
    CHECK(d.consistency_residual(s) <= 1e-9 * (1 + s.g.max_abs()));
  }
  CHECK(s.kappa == kappa);
  CHECK(s.nu == nu);
}

TEST_CASE("adaptive step examples") {
  const auto d = make_dynamics(256);
  const double dx = 2 * kPi / 256;
  const auto flat = d.init_state(ICSpec::flat());
  CHECK(adaptive_dt(flat, 0.4, 0.1) == 0.1);

  const auto shear = d.init_state(ICSpec::shear());
  CHECK(adaptive_dt(shear, 0.4, 0.1) == doctest::Approx(0.4 * dx / (1 + 1e-12)).epsilon(1e-12));
  CHECK(adaptive_dt(shear, 0.4, 1e-3) == 1e-3);

  oracle::Gen gen(107);
  for (int trial = 0; trial < 10; ++trial) {
    const auto s = d.init_state(random_ic(gen, 5));
    const double dt = d.adaptive_dt(s, 0.5, 1.0);
    CHECK(dt <= adaptive_dt(s, 0.5, 1.0));
    CHECK(dt * d.stiffness_rate(s) <= kStiffnessSafety * (1 + 1e-12));
    CHECK(dt > 0);
  }
}

TEST_CASE("classification of terminal states") {
  const auto d = make_dynamics(32);
  auto s = d.init_state(ICSpec::flat());
  CHECK_FALSE(classify(s).has_value());
  auto bad = s;
  bad.rho[3] = -0.1;
  CHECK(classify(bad) == RunStatus::positivity_lost);
  bad.g[1] = std::numeric_limits<double>::quiet_NaN();
  CHECK(classify(bad) == RunStatus::numerical_instability);
  CHECK(exit_code(RunStatus::completed) == 0);
  CHECK(exit_code(RunStatus::blowup_detected) == 2);
  CHECK(exit_code(RunStatus::positivity_lost) == 3);
  CHECK(exit_code(RunStatus::numerical_instability) == 4);
}

TEST_CASE("reflection symmetry is preserved") {
  // rho even and u odd stay even and odd.
  const auto d = make_dynamics(128, KernelFamily::log_boosted);
  auto s = advance(d, d.init_state(moving()), 0.005, 60);
  CHECK((reflect(s.rho) - s.rho).max_abs() <= 1e-12);
  CHECK((reflect(s.u) + s.u).max_abs() <= 1e-12);
}

TEST_CASE("density residual shrinks at third order") {
  const auto d = make_dynamics(128);
  const auto s0 = d.init_state(moving());
  auto residual = [&](double h) {
    const auto s1 = d.step(s0, h);
    const auto s2 = d.step(s1, h);
    return density_residual(d, s0, s1, s2);
  };
  const double r1 = residual(0.02), r2 = residual(0.01);
  CHECK(std::log2(r1 / r2) >= 3.0 - 0.3);
}

TEST_CASE("spatial self-convergence on a steep profile") {
  const double dt = 1e-3;
  auto final_rho = [&](std::size_t n) {
    const auto d = make_dynamics(n);
    return advance(d, d.init_state(ICSpec::supercritical(2)), dt, 200).rho;
  };
  const auto r64 = final_rho(64), r128 = final_rho(128), r256 = final_rho(256);
  auto coarse = [](const TorusField& fine, std::size_t stride) {
    TorusField out = TorusField::zeros(fine.size() / stride);
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = fine[j * stride];
    return out;
  };
  const double d1 = (r64 - coarse(r128, 2)).max_abs();
  const double d2 = (coarse(r128, 1) - coarse(r256, 2)).max_abs();
  MESSAGE("spatial discrepancies " << d1 << " " << d2);
  CHECK(d1 > 0);
  CHECK((d2 <= 1e-11 || d1 / d2 >= 10));
}

TEST_CASE("run conserves mass on the bump and stops on schedule") {
  RunConfig config;
  config.n = 128;
  config.t_end = 0.5;
  config.ic = moving();
  const auto result = run(config);
  REQUIRE(result.status == RunStatus::completed);
  CHECK(result.t_final == doctest::Approx(0.5).epsilon(1e-12));
  const double mass0 = result.snapshots.front().rho.mean();
  for (const auto& snap : result.snapshots) CHECK(std::abs(snap.rho.mean() - mass0) <= 1e-12);
  CHECK(result.snapshots.size() == 6);
}
