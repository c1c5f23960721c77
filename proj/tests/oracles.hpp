#pragma once

// Independent reference values built on Boost.Math quadrature, sharing no
// code with the library's own integrators.

#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/ooura_fourier_integrals.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

namespace oracle {

using Fn = std::function<double(double)>;

/// int_r^inf psi.
inline double tail_mass(const Fn& psi, double r) {
  boost::math::quadrature::exp_sinh<double> integrator;
  return integrator.integrate([&](double s) { return std::isfinite(s) && s < 1e150 ? psi(s) : 0.0; }, r,
                              std::numeric_limits<double>::infinity());
}

/// int_r^inf psi for kernels singular near r, integrated in log s.
inline double tail_mass_log(const Fn& psi, double r) {
  boost::math::quadrature::exp_sinh<double> integrator;
  const double lr = std::log(r);
  return integrator.integrate([&](double t) {
    const double s = std::exp(lr + t);
    if (!std::isfinite(s) || s > 1e150) return 0.0;
    return psi(s) * s;
  }, 0.0, std::numeric_limits<double>::infinity());
}

/// 2 int_0^inf psi(z) (1 - cos kz) dz, split at z = 1: tanh-sinh on (0, 1],
/// exp-sinh for the mass beyond 1 and Ooura's double-exponential Fourier rule
/// for the oscillatory far field.
inline double symbol(const Fn& psi, double k) {
  boost::math::quadrature::tanh_sinh<double> near;
  const double inner = near.integrate([&](double z) {
    const double s = std::sin(0.5 * k * z);
    const double p = z > 0 ? psi(z) : 0.0;
    // Overflowing psi only occurs where 2 sin^2 has already underflowed.
    return std::isfinite(p) ? p * 2 * s * s : 0.0;
  }, 0.0, 1.0);
  const double mass = tail_mass(psi, 1.0);
  boost::math::quadrature::ooura_fourier_cos<double> fc;
  boost::math::quadrature::ooura_fourier_sin<double> fs;
  auto shifted = [&](double t) { return psi(1 + t); };
  const double c = fc.integrate(shifted, k).first;
  const double s = fs.integrate(shifted, k).first;
  const double oscillatory = std::cos(k) * c - std::sin(k) * s;
  return 2 * (inner + mass - oscillatory);
}

/// 61-point Gauss-Kronrod on [a, b].
inline double gauss_kronrod(const Fn& f, double a, double b) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 15, 1e-14);
}

/// Deterministic generator for property tests.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  double log_uniform(double lo, double hi) { return std::exp(uniform(std::log(lo), std::log(hi))); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

  /// Random trigonometric polynomial coefficients [a0, a1, b1, ...] with
  /// geometric decay.
  std::vector<double> coefficients(int modes, double decay = 0.5) {
    std::vector<double> c{uniform(-1, 1)};
    double scale = 1;
    for (int k = 1; k <= modes; ++k) {
      scale *= decay;
      c.push_back(scale * uniform(-1, 1));
      c.push_back(scale * uniform(-1, 1));
    }
    return c;
  }

 private:
  std::mt19937_64 rng_;
};

}  // namespace oracle
