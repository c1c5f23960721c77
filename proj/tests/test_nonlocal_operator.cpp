#include <doctest.h>

#include <cmath>
#include <numbers>

#include "alignlab/errors.hpp"
#include "alignlab/nonlocal_operator.hpp"
#include "oracles.hpp"

using namespace alignlab;

namespace {

constexpr double kPi = std::numbers::pi;

TorusField random_field(oracle::Gen& gen, std::size_t n, int modes) {
  const auto c = gen.coefficients(modes, 0.7);
  return TorusField::sample(n, [&](double x) {
    double v = c[0];
    for (int k = 1; k <= modes; ++k) v += c[2 * k - 1] * std::cos(k * x) + c[2 * k] * std::sin(k * x);
    return v;
  });
}

double pairing(const TorusField& f, const TorusField& g) { return f.values().dot(g.values()); }

}  // namespace

TEST_CASE("lambda_0 is exactly zero and every lambda_k is nonnegative") {
  for (auto f : {KernelFamily::power, KernelFamily::inverse_linear, KernelFamily::log_boosted,
                 KernelFamily::log_damped, KernelFamily::lipschitz_gaussian}) {
    const auto symbol = compute_symbol(KernelSpec::make(f), 64);
    CHECK(symbol.lambda[0] == 0.0);
    CHECK(symbol.lambda.minCoeff() >= 0.0);
    CHECK(symbol.lambda.size() == 33);
  }
}

TEST_CASE("power 0.5: lambda_k / sqrt(k) is the oracle constant") {
  const auto power = KernelSpec::power(0.5);
  const double constant = oracle::symbol([](double s) { return std::pow(s, -1.5); }, 1.0);
  CHECK(constant == doctest::Approx(2 * std::sqrt(2 * kPi)).epsilon(1e-10));
  const auto symbol = compute_symbol(power, 32);
  for (int k : {1, 2, 4, 8, 16}) {
    CHECK(std::abs(symbol.lambda[k] / std::sqrt(double(k)) - constant) <= 1e-8 * constant);
  }
}

TEST_CASE("symbol matches the independent oracle for every family") {
  const std::pair<KernelFamily, oracle::Fn> cases[] = {
      {KernelFamily::inverse_linear, [](double r) { return 1 / (r * (1 + r * r)); }},
      {KernelFamily::log_boosted, [](double r) { return std::log(std::numbers::e + 1 / r) / (r * (1 + r * r)); }},
      {KernelFamily::log_damped, [](double r) { return 1 / (r * std::log(std::numbers::e + 1 / r) * (1 + r * r)); }},
      {KernelFamily::lipschitz_gaussian, [](double r) { return std::exp(-r * r / 2); }},
  };
  for (const auto& [family, psi] : cases) {
    const auto profile_ = profile(KernelSpec::make(family));
    for (int k : {1, 3, 7, 16}) {
      const double expected = oracle::symbol(psi, k);
      CHECK_MESSAGE(symbol_value(profile_, k, 1e-12) == doctest::Approx(expected).epsilon(1e-9),
                    (std::string(to_string(family)) + " k=" + std::to_string(k)));
    }
  }
}

TEST_CASE("gaussian symbol closed form and bound") {
  const auto symbol = compute_symbol(KernelSpec::make(KernelFamily::lipschitz_gaussian), 256);
  const double bound = 2 * std::sqrt(kPi / 2);
  for (int k = 0; k <= 128; ++k) {
    CHECK(symbol.lambda[k] == doctest::Approx(std::sqrt(2 * kPi) * (1 - std::exp(-0.5 * k * k))).epsilon(1e-12));
    CHECK(symbol.lambda[k] <= bound * (1 + 1e-14));
  }
}

TEST_CASE("symbol of a kernel sum is the sum of symbols") {
  const auto a = profile(KernelSpec::make(KernelFamily::inverse_linear));
  const auto b = profile(KernelSpec::make(KernelFamily::lipschitz_gaussian));
  const auto sa = compute_symbol(a, 128);
  const auto sb = compute_symbol(b, 128);
  const auto sum = compute_symbol(a + b, 128);
  for (Eigen::Index k = 0; k < sum.lambda.size(); ++k) {
    CHECK(sum.lambda[k] == doctest::Approx(sa.lambda[k] + sb.lambda[k]).epsilon(1e-11));
  }
}

TEST_CASE("singular symbols grow without bound") {
  for (auto f : {KernelFamily::power, KernelFamily::inverse_linear, KernelFamily::log_boosted,
                 KernelFamily::log_damped}) {
    for (std::size_t n : {32u, 128u, 512u}) {
      const auto s = compute_symbol(KernelSpec::make(f), n);
      CHECK(s.lambda[static_cast<Eigen::Index>(n / 2)] > s.lambda[static_cast<Eigen::Index>(n / 8)]);
    }
  }
}

TEST_CASE("symbol computation is deterministic across worker counts") {
  const auto spec = KernelSpec::make(KernelFamily::log_damped);
  const auto one = compute_symbol(spec, 128, 1e-12, 1);
  const auto four = compute_symbol(spec, 128, 1e-12, 4);
  CHECK(one.lambda == four.lambda);
}

TEST_CASE("symbol argument errors") {
  const auto spec = KernelSpec::make(KernelFamily::inverse_linear);
  CHECK_THROWS_AS(compute_symbol(spec, 100), ArgumentError);
  CHECK_THROWS_AS(compute_symbol(spec, 16), ArgumentError);
  CHECK_THROWS_AS(compute_symbol(spec, 64, 1e-3), ArgumentError);
  CHECK_THROWS_AS(compute_symbol(spec, 64, 1e-16), ArgumentError);
}

TEST_CASE("apply_spectral examples") {
  const auto spec = KernelSpec::make(KernelFamily::inverse_linear);
  const auto symbol = compute_symbol(spec, 128);
  CHECK(apply_spectral(symbol, TorusField::constant(128, 3.5)).max_abs() <= 1e-14);
  const auto c3 = TorusField::sample(128, [](double x) { return std::cos(3 * x); });
  CHECK((apply_spectral(symbol, c3) - symbol.lambda[3] * c3).max_abs() <= 1e-13 * symbol.lambda[3]);
  CHECK_THROWS_AS(apply_spectral(symbol, TorusField::zeros(64)), ArgumentError);
}

TEST_CASE("property: apply_spectral is linear, mean-free and positive") {
  oracle::Gen gen(41);
  const auto symbol = compute_symbol(KernelSpec::make(KernelFamily::log_boosted), 128);
  for (int trial = 0; trial < 25; ++trial) {
    const auto f = random_field(gen, 128, 20);
    const auto g = random_field(gen, 128, 20);
    const double a = gen.uniform(-2, 2), b = gen.uniform(-2, 2);
    const auto lhs = apply_spectral(symbol, a * f + b * g);
    const auto rhs = a * apply_spectral(symbol, f) + b * apply_spectral(symbol, g);
    CHECK((lhs - rhs).max_abs() <= 1e-12 * (1 + rhs.max_abs()));
    CHECK(std::abs(apply_spectral(symbol, f).mean()) <= 1e-14 * (1 + apply_spectral(symbol, f).max_abs()));
    CHECK(pairing(f, apply_spectral(symbol, f)) >= 0);
  }
}

TEST_CASE("direct operator agrees with the spectral one and converges under refinement") {
  const auto spec = KernelSpec::make(KernelFamily::inverse_linear);
  const auto f = TorusField::sample(256, [](double x) { return std::cos(5 * x); });
  const auto spectral = apply_spectral(compute_symbol(spec, 256), f);
  const double e4 = (apply_direct(spec, f, 4) - spectral).max_abs();
  const double e8 = (apply_direct(spec, f, 8) - spectral).max_abs();
  CHECK(e4 <= 1e-6 * f.max_abs());
  CHECK(e4 >= 4 * e8);
}

TEST_CASE("direct operator on random smooth fields") {
  oracle::Gen gen(43);
  for (auto family : {KernelFamily::log_damped, KernelFamily::lipschitz_gaussian, KernelFamily::power}) {
    const auto spec = KernelSpec::make(family);
    const auto symbol = compute_symbol(spec, 64);
    const auto f = random_field(gen, 64, 8);
    const auto direct = apply_direct(spec, f, 8);
    const auto spectral = apply_spectral(symbol, f);
    CHECK_MESSAGE((direct - spectral).max_abs() <= 1e-6 * (1 + spectral.max_abs()), to_string(family));
    CHECK(pairing(f, direct) >= 0);
  }
}

TEST_CASE("direct operator: constants, reflection, rejection") {
  const auto spec = KernelSpec::make(KernelFamily::inverse_linear);
  CHECK(apply_direct(spec, TorusField::constant(64, 2.0), 4).max_abs() <= 1e-12);

  oracle::Gen gen(47);
  const auto f = random_field(gen, 64, 6);
  auto reflect = [](const TorusField& g) {
    // x_j -> -x_j maps index j to (n - j) mod n on the grid starting at -pi.
    const std::size_t n = g.size();
    TorusField out = g;
    for (std::size_t j = 0; j < n; ++j) out[j] = g[(n - j) % n];
    return out;
  };
  const auto a = apply_direct(spec, reflect(f), 4);
  const auto b = reflect(apply_direct(spec, f, 4));
  CHECK((a - b).max_abs() <= 1e-10 * (1 + b.max_abs()));

  auto rough = TorusField::zeros(64);
  for (std::size_t j = 0; j < 64; ++j) rough[j] = gen.uniform(-1, 1);
  CHECK_THROWS_AS(apply_direct(spec, rough, 4), ArgumentError);
  CHECK_THROWS_AS(apply_direct(spec, f, 3), ArgumentError);
}

TEST_CASE("periodized kernel matches a long explicit image sum") {
  const auto gauss = profile(KernelSpec::make(KernelFamily::lipschitz_gaussian));
  for (double z : {0.1, 1.0, 3.0}) {
    double sum = 0;
    for (int j = -10; j <= 10; ++j) sum += std::exp(-0.5 * (z + 2 * kPi * j) * (z + 2 * kPi * j));
    CHECK(periodized_psi(gauss, z, image_count(gauss, 1e-14)) == doctest::Approx(sum).epsilon(1e-13));
  }
  const auto il = profile(KernelSpec::make(KernelFamily::inverse_linear));
  const int images = image_count(il, 1e-10);
  CHECK(images <= kMaxImages);
  double sum = 0;
  for (int j = -200000; j <= 200000; ++j) {
    const double r = std::abs(0.5 + 2 * kPi * j);
    sum += 1 / (r * (1 + r * r));
  }
  CHECK(periodized_psi(il, 0.5, images) == doctest::Approx(sum).epsilon(1e-9));
}
