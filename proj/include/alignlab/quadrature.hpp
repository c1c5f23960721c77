#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <queue>
#include <vector>

namespace alignlab {

struct QuadratureResult {
  double value = 0;
  double error = 0;
  int evaluations = 0;
  bool converged = false;
};

namespace detail {

// 15-point Kronrod extension of the 7-point Gauss rule (QUADPACK qk15).
inline constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
  double a, b, value, error;
  bool operator<(const Segment& o) const { return error < o.error; }
};

template <typename Fn>
Segment kronrod15(Fn& f, double a, double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(center);
  double kronrod = fc * kKronrodWeights[7];
  double gauss = fc * kGaussWeights[3];
  double abs_sum = std::abs(kronrod);
  std::array<double, 7> f1{}, f2{};
  for (int j = 0; j < 7; ++j) {
    const double dx = half * kKronrodNodes[static_cast<std::size_t>(j)];
    f1[static_cast<std::size_t>(j)] = f(center - dx);
    f2[static_cast<std::size_t>(j)] = f(center + dx);
    const double pair = f1[static_cast<std::size_t>(j)] + f2[static_cast<std::size_t>(j)];
    kronrod += kKronrodWeights[static_cast<std::size_t>(j)] * pair;
    abs_sum += kKronrodWeights[static_cast<std::size_t>(j)] *
               (std::abs(f1[static_cast<std::size_t>(j)]) + std::abs(f2[static_cast<std::size_t>(j)]));
    if (j % 2 == 1) gauss += kGaussWeights[static_cast<std::size_t>(j / 2)] * pair;
  }
  const double mean = 0.5 * kronrod;
  double asc = kKronrodWeights[7] * std::abs(fc - mean);
  for (std::size_t j = 0; j < 7; ++j) {
    asc += kKronrodWeights[j] * (std::abs(f1[j] - mean) + std::abs(f2[j] - mean));
  }
  const double value = kronrod * half;
  abs_sum *= std::abs(half);
  asc *= std::abs(half);
  double err = std::abs((kronrod - gauss) * half);
  if (asc != 0 && err != 0) err = asc * std::min(1.0, std::pow(200 * err / asc, 1.5));
  constexpr double eps = std::numeric_limits<double>::epsilon();
  if (abs_sum > std::numeric_limits<double>::min() / (50 * eps)) err = std::max(50 * eps * abs_sum, err);
  return {a, b, value, err};
}

}  // namespace detail

/// Globally adaptive Gauss-Kronrod quadrature of f over [a, b]. Stops when
/// the summed error estimate is below max(abs_tol, rel_tol * |I|) or after
/// `max_segments` bisections; `converged` reports which.
template <typename Fn>
QuadratureResult integrate_adaptive(Fn&& f, double a, double b, double rel_tol,
                                    double abs_tol = 0.0, int max_segments = 4000) {
  QuadratureResult out;
  if (a == b) {
    out.converged = true;
    return out;
  }
  std::priority_queue<detail::Segment> heap;
  detail::Segment first = detail::kronrod15(f, a, b);
  heap.push(first);
  double value = first.value;
  double error = first.error;
  int segments = 1;
  while (error > std::max(abs_tol, rel_tol * std::abs(value)) && segments < max_segments) {
    const detail::Segment worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (mid <= worst.a || mid >= worst.b) {
      heap.push(worst);
      break;
    }
    const detail::Segment left = detail::kronrod15(f, worst.a, mid);
    const detail::Segment right = detail::kronrod15(f, mid, worst.b);
    heap.push(left);
    heap.push(right);
    ++segments;
    value += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
  }
  // Final resummation removes incremental drift.
  value = 0;
  error = 0;
  while (!heap.empty()) {
    value += heap.top().value;
    error += heap.top().error;
    heap.pop();
  }
  out.value = value;
  out.error = error;
  out.evaluations = 15 * (2 * segments - 1);
  out.converged = error <= std::max(abs_tol, rel_tol * std::abs(value));
  return out;
}

/// m-point Gauss-Legendre rule on [-1, 1] from the Jacobi matrix
/// (Golub-Welsch).
struct GaussRule {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
};

inline GaussRule gauss_legendre(int m) {
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(m, m);
  for (int i = 1; i < m; ++i) {
    const double b = i / std::sqrt(4.0 * i * i - 1.0);
    jacobi(i, i - 1) = b;
    jacobi(i - 1, i) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
  GaussRule rule;
  rule.nodes = eig.eigenvalues();
  rule.weights = 2.0 * eig.eigenvectors().row(0).transpose().array().square();
  return rule;
}

}  // namespace alignlab
