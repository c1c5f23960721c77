#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <string>

#include "alignlab/fourier.hpp"
#include "alignlab/kernels.hpp"
#include "alignlab/parallel.hpp"
#include "alignlab/torus_field.hpp"

namespace alignlab {

/// Fourier multiplier lambda_k = 2 int_0^inf psi(z) (1 - cos kz) dz of the
/// operator Lf(x) = int psi(x - y) (f(x) - f(y)) dy on an n-point grid,
/// for k = 0..n/2.
struct SpectralSymbol {
  std::size_t n = 0;
  Eigen::VectorXd lambda;
  std::string kernel;
  double tol = 0;

  double operator[](std::size_t k) const { return lambda[static_cast<Eigen::Index>(k)]; }
};

inline constexpr double kDefaultSymbolTol = 1e-12;

/// One multiplier value. k = 0 gives 0 exactly.
double symbol_value(const RadialProfile& kernel, std::size_t k, double tol);

/// tol must lie in [1e-14, 1e-6]; n must be a power of two >= 32.
SpectralSymbol compute_symbol(const RadialProfile& kernel, std::size_t n,
                              double tol = kDefaultSymbolTol,
                              std::size_t workers = default_workers());
SpectralSymbol compute_symbol(const KernelSpec& spec, std::size_t n,
                              double tol = kDefaultSymbolTol,
                              std::size_t workers = default_workers());

/// Multiplies each coefficient by lambda_|k| in place.
void apply_symbol(const SpectralSymbol& symbol, Fourier<double>::Spectrum& s);

TorusField apply_spectral(const SpectralSymbol& symbol, const TorusField& f);
TorusField apply_spectral(const SpectralSymbol& symbol, const TorusField& f,
                          const Fourier<double>& fourier);

struct DirectOptions {
  int refinement = 4;
  double tol = 1e-10;
  std::size_t workers = default_workers();
};

/// Real-space quadrature of Lf against the periodized kernel. The cell
/// [0, pi / (refinement n)) uses 2f(x) - f(x-z) - f(x+z) ~ -f''(x) z^2 with
/// a spectral f''; the remaining integral is a composite Gauss rule on
/// graded-then-uniform panels with shifted samples taken from the
/// trigonometric interpolant. Rejects fields whose spectral tail fraction
/// is >= 0.1.
TorusField apply_direct(const RadialProfile& kernel, const TorusField& f,
                        const DirectOptions& options = {});
TorusField apply_direct(const KernelSpec& spec, const TorusField& f, int refinement);

/// Periodized kernel sum_j psi(z + 2 pi j), |z| <= pi, with the images
/// beyond `images` replaced by their tail-mass (midpoint rule) estimate.
double periodized_psi(const RadialProfile& kernel, double z, int images);

/// Number of periodic images whose neglected tail mass is below tol,
/// capped at kMaxImages.
int image_count(const RadialProfile& kernel, double tol);
inline constexpr int kMaxImages = 2048;

}  // namespace alignlab
