#include "alignlab/nonlocal_operator.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "alignlab/errors.hpp"
#include "alignlab/quadrature.hpp"

namespace alignlab {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kFarRadius = 2 * kPi;
constexpr int kMaxTailPanels = 400;

// Wynn epsilon algorithm, one partial sum at a time; returns the current
// limit estimate.
class EpsilonAccelerator {
 public:
  double push(double partial_sum) {
    const std::size_t n = table_.size();
    table_.push_back(partial_sum);
    if (n == 0) return partial_sum;
    double aux2 = 0;
    for (std::size_t j = n; j >= 1; --j) {
      const double aux1 = aux2;
      aux2 = table_[j - 1];
      const double diff = table_[j] - aux2;
      table_[j - 1] = std::abs(diff) < kTiny ? kHuge : aux1 + 1 / diff;
    }
    return n % 2 == 0 ? table_[0] : table_[1];
  }

 private:
  static constexpr double kTiny = 1e-300;
  static constexpr double kHuge = 1e300;
  std::vector<double> table_;
};

double positive_panel(const std::function<double(double)>& f, double a, double b, double tol,
                      const char* what) {
  const auto q = integrate_adaptive(f, a, b, tol);
  if (!q.converged) {
    throw NumericalError(std::string("symbol quadrature did not converge on the ") + what,
                         q.error / std::max(std::abs(q.value), 1e-300));
  }
  return q.value;
}

// int_Z^inf psi(z) cos(kz) dz over half-period panels, accelerated.
double oscillatory_tail(const RadialProfile& kernel, double kk, double tol, double scale) {
  const double h = kPi / kk;
  EpsilonAccelerator eps;
  double sum = 0;
  double previous = std::numeric_limits<double>::quiet_NaN();
  double before = std::numeric_limits<double>::quiet_NaN();
  std::function<double(double)> f = [&](double z) { return kernel.psi(z) * std::cos(kk * z); };
  for (int j = 0; j < kMaxTailPanels; ++j) {
    const double a = kFarRadius + j * h;
    const auto q = integrate_adaptive(f, a, a + h, 0.01 * tol, 1e-3 * tol * scale);
    sum += q.value;
    // Alternating series with decreasing terms: the remainder is below the next term.
    if (std::abs(q.value) < 1e-3 * tol * scale) return sum;
    const double estimate = eps.push(sum);
    if (j >= 6 && std::abs(estimate - previous) < 1e-2 * tol * scale &&
        std::abs(previous - before) < 1e-2 * tol * scale) {
      return estimate;
    }
    before = previous;
    previous = estimate;
  }
  throw NumericalError("oscillatory far-field tail did not converge",
                       std::abs(previous - before) / scale);
}

}  // namespace

double symbol_value(const RadialProfile& kernel, std::size_t k, double tol) {
  if (k == 0 || kernel.zero) return 0;
  const double kk = static_cast<double>(k);
  const double h = kPi / kk;

  // (1 - cos kz) is evaluated as 2 sin^2(kz/2) to avoid cancellation near 0.
  std::function<double(double)> bulk = [&](double z) {
    const double s = std::sin(0.5 * kk * z);
    return kernel.psi(z) * 2 * s * s;
  };
  double body = 0;
  const std::size_t panels = 2 * k;  // [h, 2 pi] split at the zeros of cos(kz)
  for (std::size_t j = 1; j < panels; ++j) {
    body += positive_panel(bulk, j * h, (j + 1) * h, 0.1 * tol, "bulk panels");
  }

  const double far_mass = kernel.tail(kFarRadius);
  const double scale = body + far_mass;
  const double far = far_mass - oscillatory_tail(kernel, kk, tol, scale);

  // Near-origin cell in the variable y = log z; the piece [0, eps) is
  // bounded by k^2/2 int_0^eps psi z^2 dz ~ k^2 eps^3 psi(eps).
  double eps = 1e-2 * h;
  for (int i = 0; i < 60 && kk * kk * eps * eps * eps * kernel.psi(eps) > 1e-2 * tol * scale; ++i) {
    eps *= 0.1;
  }
  std::function<double(double)> near = [&](double y) {
    const double z = std::exp(y);
    const double s = std::sin(0.5 * kk * z);
    return kernel.psi(z) * z * 2 * s * s;
  };
  const double core = positive_panel(near, std::log(eps), std::log(h), 0.1 * tol, "origin cell");

  return 2 * (core + body + far);
}

SpectralSymbol compute_symbol(const RadialProfile& kernel, std::size_t n, double tol,
                              std::size_t workers) {
  if (n < TorusField::kMinSize || !is_power_of_two(n)) {
    throw ArgumentError("symbol grid size must be a power of two >= 32");
  }
  if (!(tol >= 1e-14 && tol <= 1e-6)) throw ArgumentError("symbol tolerance must lie in [1e-14, 1e-6]");
  SpectralSymbol symbol;
  symbol.n = n;
  symbol.kernel = kernel.name;
  symbol.tol = tol;
  symbol.lambda = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n / 2 + 1));
  parallel_for(
      n / 2 + 1,
      [&](std::size_t k) { symbol.lambda[static_cast<Eigen::Index>(k)] = symbol_value(kernel, k, tol); },
      workers);
  symbol.lambda[0] = 0;
  return symbol;
}

SpectralSymbol compute_symbol(const KernelSpec& spec, std::size_t n, double tol, std::size_t workers) {
  validate(spec);
  auto symbol = compute_symbol(profile(spec), n, tol, workers);
  symbol.kernel = describe(spec);
  return symbol;
}

void apply_symbol(const SpectralSymbol& symbol, Fourier<double>::Spectrum& s) {
  if (static_cast<std::size_t>(s.size()) != symbol.n / 2 + 1) {
    throw ArgumentError("spectrum size does not match the symbol grid");
  }
  s.array() *= symbol.lambda.array().cast<std::complex<double>>();
}

TorusField apply_spectral(const SpectralSymbol& symbol, const TorusField& f,
                          const Fourier<double>& fourier) {
  if (f.size() != symbol.n || fourier.size() != symbol.n) {
    throw ArgumentError("symbol size " + std::to_string(symbol.n) + " does not match field size " +
                        std::to_string(f.size()));
  }
  auto s = fourier.forward(f);
  apply_symbol(symbol, s);
  return fourier.inverse(s);
}

TorusField apply_spectral(const SpectralSymbol& symbol, const TorusField& f) {
  if (f.size() != symbol.n) {
    throw ArgumentError("symbol size " + std::to_string(symbol.n) + " does not match field size " +
                        std::to_string(f.size()));
  }
  return apply_spectral(symbol, f, Fourier<double>(f.size()));
}

int image_count(const RadialProfile& kernel, double tol) {
  if (kernel.zero) return 0;
  const double reference = kernel.tail(kPi);
  int j = 1;
  // The edge correction is evaluated down to 2 pi j for |z| <= pi.
  while (j < kMaxImages && kernel.tail(2 * j * kPi) > tol * reference) ++j;
  return j;
}

double periodized_psi(const RadialProfile& kernel, double z, int images) {
  if (kernel.zero) return 0;
  double sum = kernel.psi(z);
  for (int j = 1; j <= images; ++j) {
    sum += kernel.psi(2 * kPi * j + z) + kernel.psi(2 * kPi * j - z);
  }
  // sum_{j > J} psi(2 pi j +- z) ~ (1 / 2 pi) int_{J + 1/2}^inf psi(2 pi s +- z) ds.
  const double edge = 2 * kPi * (images + 0.5);
  sum += (kernel.tail(edge + z) + kernel.tail(edge - z)) / (2 * kPi);
  return sum;
}

TorusField apply_direct(const RadialProfile& kernel, const TorusField& f, const DirectOptions& options) {
  const std::size_t n = f.size();
  if (options.refinement < 4) throw ArgumentError("direct refinement must be >= 4");
  const Fourier<double> fourier(n);
  const auto spectrum = fourier.forward(f);
  const double tail = fourier.tail_fraction(spectrum);
  if (tail >= 0.1) {
    throw ArgumentError("apply_direct needs a smooth field: spectral tail fraction " +
                        std::to_string(tail) + " >= 0.1 invalidates the quadrature error estimate");
  }
  if (kernel.zero) return TorusField::zeros(n);

  const int images = image_count(kernel, options.tol);
  const double dx = f.dx();
  const double inner = kPi / (options.refinement * static_cast<double>(n));

  // Composite Gauss nodes on [inner, pi]: dyadic panels up to dx/2, then
  // uniform panels of width <= dx/2.
  const GaussRule rule = gauss_legendre(10);
  std::vector<double> nodes, weights;
  auto add_panel = [&](double a, double b) {
    for (Eigen::Index q = 0; q < rule.nodes.size(); ++q) {
      nodes.push_back(0.5 * (a + b) + 0.5 * (b - a) * rule.nodes[q]);
      weights.push_back(0.5 * (b - a) * rule.weights[q]);
    }
  };
  double a = inner;
  while (2 * a < 0.5 * dx) {
    add_panel(a, 2 * a);
    a *= 2;
  }
  const auto uniform = static_cast<std::size_t>(std::ceil((kPi - a) / (0.5 * dx)));
  const double width = (kPi - a) / static_cast<double>(uniform);
  for (std::size_t p = 0; p < uniform; ++p) add_panel(a + p * width, a + (p + 1) * width);

  std::vector<double> kernel_weight(nodes.size());
  for (std::size_t q = 0; q < nodes.size(); ++q) {
    kernel_weight[q] = weights[q] * periodized_psi(kernel, nodes[q], images);
  }

  // Inner cell weight W = int_0^inner psi_per(z) z^2 dz: singular part in log
  // variables, image part (smooth) by Gauss.
  std::function<double(double)> near = [&](double y) {
    const double z = std::exp(y);
    return kernel.psi(z) * z * z * z;
  };
  const auto core = integrate_adaptive(near, std::log(inner) - 80, std::log(inner), 1e-3 * options.tol);
  double inner_weight = core.value;
  for (Eigen::Index q = 0; q < rule.nodes.size(); ++q) {
    const double z = 0.5 * inner * (1 + rule.nodes[q]);
    const double images_only = periodized_psi(kernel, z, images) - kernel.psi(z);
    inner_weight += 0.5 * inner * rule.weights[q] * images_only * z * z;
  }

  auto second = spectrum;
  fourier.differentiate(second);
  fourier.differentiate(second);
  const TorusField curvature = fourier.inverse(second);

  // Each node contributes w psi_per(z) (2 f(x) - f(x - z) - f(x + z)); the
  // shifted samples f(x_i +- z) of the interpolant come from one inverse
  // transform of F_k 2 cos(kz). Workers own disjoint node ranges; partial
  // sums are combined in node-block order.
  const std::size_t workers = std::max<std::size_t>(1, options.workers);
  const std::size_t blocks = std::min(workers, nodes.size());
  std::vector<Eigen::VectorXd> partial(blocks, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n)));
  parallel_for(
      blocks,
      [&](std::size_t b) {
        const Fourier<double> local(n);
        Fourier<double>::Spectrum shifted(spectrum.size());
        const std::size_t begin = nodes.size() * b / blocks;
        const std::size_t end = nodes.size() * (b + 1) / blocks;
        for (std::size_t q = begin; q < end; ++q) {
          for (Eigen::Index k = 0; k < spectrum.size(); ++k) {
            shifted[k] = spectrum[k] * (2 * std::cos(static_cast<double>(k) * nodes[q]));
          }
          const TorusField pair_sum = local.inverse(shifted);
          partial[b] += kernel_weight[q] * (2 * f.values() - pair_sum.values());
        }
      },
      blocks);

  Eigen::VectorXd out = -inner_weight * curvature.values();
  for (const auto& p : partial) out += p;
  return TorusField(std::move(out));
}

TorusField apply_direct(const KernelSpec& spec, const TorusField& f, int refinement) {
  DirectOptions options;
  options.refinement = refinement;
  return apply_direct(profile(spec), f, options);
}

}  // namespace alignlab
