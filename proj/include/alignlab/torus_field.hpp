#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>

#include "alignlab/errors.hpp"

namespace alignlab {

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

/// Real samples of a 2pi-periodic function at x_j = -pi + 2pi j / n.
template <typename Scalar>
class BasicTorusField {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  static constexpr std::size_t kMinSize = 32;

  BasicTorusField() = default;

  explicit BasicTorusField(Vector values) : values_(std::move(values)) {
    const auto n = static_cast<std::size_t>(values_.size());
    if (n < kMinSize || !is_power_of_two(n)) {
      throw ArgumentError("torus grid size must be a power of two >= 32, got " +
                          std::to_string(n));
    }
  }

  static BasicTorusField zeros(std::size_t n) {
    return BasicTorusField(Vector::Zero(static_cast<Eigen::Index>(n)));
  }

  static BasicTorusField constant(std::size_t n, Scalar c) {
    return BasicTorusField(Vector::Constant(static_cast<Eigen::Index>(n), c));
  }

  template <typename Fn>
  static BasicTorusField sample(std::size_t n, Fn&& fn) {
    Vector v(static_cast<Eigen::Index>(n));
    for (std::size_t j = 0; j < n; ++j) v[static_cast<Eigen::Index>(j)] = fn(node(n, j));
    return BasicTorusField(std::move(v));
  }

  static Scalar node(std::size_t n, std::size_t j) {
    const Scalar pi = std::numbers::pi_v<Scalar>;
    return -pi + 2 * pi * static_cast<Scalar>(j) / static_cast<Scalar>(n);
  }

  static Scalar spacing(std::size_t n) {
    return 2 * std::numbers::pi_v<Scalar> / static_cast<Scalar>(n);
  }

  std::size_t size() const { return static_cast<std::size_t>(values_.size()); }
  Scalar dx() const { return spacing(size()); }
  Scalar x(std::size_t j) const { return node(size(), j); }

  const Vector& values() const { return values_; }
  Vector& values() { return values_; }

  Scalar operator[](std::size_t j) const { return values_[static_cast<Eigen::Index>(j)]; }
  Scalar& operator[](std::size_t j) { return values_[static_cast<Eigen::Index>(j)]; }

  Scalar mean() const { return values_.mean(); }
  Scalar min() const { return values_.minCoeff(); }
  Scalar max() const { return values_.maxCoeff(); }
  Scalar max_abs() const { return values_.cwiseAbs().maxCoeff(); }
  bool all_finite() const { return values_.allFinite(); }

  BasicTorusField& operator+=(const BasicTorusField& o) {
    check_same_grid(o);
    values_ += o.values_;
    return *this;
  }
  BasicTorusField& operator-=(const BasicTorusField& o) {
    check_same_grid(o);
    values_ -= o.values_;
    return *this;
  }
  BasicTorusField& operator*=(Scalar c) {
    values_ *= c;
    return *this;
  }

  friend BasicTorusField operator+(BasicTorusField a, const BasicTorusField& b) { return a += b; }
  friend BasicTorusField operator-(BasicTorusField a, const BasicTorusField& b) { return a -= b; }
  friend BasicTorusField operator*(Scalar c, BasicTorusField a) { return a *= c; }

  void check_same_grid(const BasicTorusField& o) const {
    if (o.size() != size()) {
      throw ArgumentError("torus fields of different sizes (" + std::to_string(size()) +
                          " vs " + std::to_string(o.size()) + ")");
    }
  }

 private:
  Vector values_;
};

using TorusField = BasicTorusField<double>;

/// Pointwise product.
template <typename Scalar>
BasicTorusField<Scalar> hadamard(const BasicTorusField<Scalar>& a,
                                 const BasicTorusField<Scalar>& b) {
  a.check_same_grid(b);
  return BasicTorusField<Scalar>(a.values().cwiseProduct(b.values()));
}

/// Pointwise quotient.
template <typename Scalar>
BasicTorusField<Scalar> quotient(const BasicTorusField<Scalar>& a,
                                 const BasicTorusField<Scalar>& b) {
  a.check_same_grid(b);
  return BasicTorusField<Scalar>(a.values().cwiseQuotient(b.values()));
}

}  // namespace alignlab
