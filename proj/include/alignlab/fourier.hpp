#pragma once

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>

#include "alignlab/torus_field.hpp"

namespace alignlab {

/// Real-to-half-complex transforms on an n-point torus grid, plus the
/// Fourier-side operations the solver builds on. Coefficients are unscaled
/// DFT values F_k = sum_j f_j exp(-2 pi i j k / n), k = 0..n/2.
///
/// Holds an FFT plan cache, so one instance must not be shared between
/// threads.
template <typename Scalar>
class Fourier {
 public:
  using Field = BasicTorusField<Scalar>;
  using Complex = std::complex<Scalar>;
  using Spectrum = Eigen::Matrix<Complex, Eigen::Dynamic, 1>;
  using RealVector = typename Field::Vector;

  explicit Fourier(std::size_t n) : n_(n) {
    if (n < Field::kMinSize || !is_power_of_two(n)) {
      throw ArgumentError("Fourier grid size must be a power of two >= 32");
    }
    fft_.SetFlag(Eigen::FFT<Scalar>::HalfSpectrum);
  }

  std::size_t size() const { return n_; }
  std::size_t modes() const { return n_ / 2 + 1; }

  Spectrum forward(const Field& f) const {
    check(f);
    Spectrum out(static_cast<Eigen::Index>(modes()));
    fft_.fwd(out, f.values());
    return out;
  }

  Field inverse(const Spectrum& s) const {
    RealVector out(static_cast<Eigen::Index>(n_));
    fft_.inv(out, s, static_cast<Eigen::Index>(n_));
    return Field(std::move(out));
  }

  /// Multiplies mode k by ik. The Nyquist mode is dropped: its derivative
  /// is not representable as a real field.
  void differentiate(Spectrum& s) const {
    for (std::size_t k = 0; k < modes(); ++k) s[idx(k)] *= Complex(0, static_cast<Scalar>(k));
    s[idx(n_ / 2)] = Complex(0);
  }

  /// Divides mode k by ik; mean and Nyquist modes are set to zero.
  void integrate(Spectrum& s) const {
    s[0] = Complex(0);
    for (std::size_t k = 1; k < modes(); ++k) s[idx(k)] /= Complex(0, static_cast<Scalar>(k));
    s[idx(n_ / 2)] = Complex(0);
  }

  /// Largest wavenumber kept by a truncation to `fraction` of the modes.
  std::size_t cutoff(Scalar fraction) const {
    const auto k = static_cast<std::size_t>(std::floor(fraction * static_cast<Scalar>(n_ / 2)));
    return std::min(k, n_ / 2);
  }

  void truncate(Spectrum& s, Scalar fraction) const {
    const std::size_t kmax = cutoff(fraction);
    for (std::size_t k = kmax + 1; k < modes(); ++k) s[idx(k)] = Complex(0);
  }

  Field derivative(const Field& f) const {
    Spectrum s = forward(f);
    differentiate(s);
    return inverse(s);
  }

  /// Mean-zero periodic primitive of f - mean(f).
  Field primitive(const Field& f) const {
    Spectrum s = forward(f);
    integrate(s);
    return inverse(s);
  }

  Field truncated(const Field& f, Scalar fraction) const {
    Spectrum s = forward(f);
    truncate(s, fraction);
    return inverse(s);
  }

  /// Energy in the top third of the nonzero modes over the energy of all
  /// nonzero modes.
  Scalar tail_fraction(const Spectrum& s) const {
    const std::size_t start = n_ / 3 + 1;
    Scalar total = 0;
    Scalar tail = 0;
    for (std::size_t k = 1; k < modes(); ++k) {
      const Scalar e = std::norm(s[idx(k)]);
      total += e;
      if (k >= start) tail += e;
    }
    return total > 0 ? tail / total : Scalar(0);
  }

  Scalar tail_fraction(const Field& f) const { return tail_fraction(forward(f)); }

  /// Trigonometric interpolant of the samples behind `s`, evaluated at x.
  Scalar interpolate(const Spectrum& s, Scalar x) const {
    const Scalar pi = std::numbers::pi_v<Scalar>;
    const Complex step = std::polar(Scalar(1), x + pi);
    Complex phase = step;
    Scalar acc = s[0].real();
    for (std::size_t k = 1; k < n_ / 2; ++k) {
      acc += 2 * (s[idx(k)] * phase).real();
      phase *= step;
    }
    // Nyquist term of the real interpolant: cos(n/2 (x + pi)).
    acc += s[idx(n_ / 2)].real() * std::cos(static_cast<Scalar>(n_ / 2) * (x + pi));
    return acc / static_cast<Scalar>(n_);
  }

 private:
  static Eigen::Index idx(std::size_t k) { return static_cast<Eigen::Index>(k); }

  void check(const Field& f) const {
    if (f.size() != n_) throw ArgumentError("field size does not match the Fourier grid");
  }

  std::size_t n_;
  mutable Eigen::FFT<Scalar> fft_;
};

}  // namespace alignlab
