#include "alignlab/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "alignlab/errors.hpp"
#include "alignlab/nonlocal_operator.hpp"

namespace alignlab {

namespace {

constexpr double kPi = std::numbers::pi;

PrincipleCheck sup_principle(const DiagnosticsRecord& record, double DiagnosticsRow::*field, const char* name) {
  PrincipleCheck out;
  if (record.empty()) {
    out.message = std::string(name) + ": empty record";
    return out;
  }
  const auto& rows = record.rows();
  out.initial_sup = rows.front().*field;
  out.tolerance = 1e-4 * out.initial_sup + 1e-8;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double excess = rows[i].*field - out.initial_sup;
    out.worst_excess = std::max(out.worst_excess, excess);
    if (!(excess <= out.tolerance) && !out.first_violation) out.first_violation = i;
  }
  out.pass = !out.first_violation;
  std::ostringstream msg;
  msg.precision(6);
  msg << name << ": sup(0) = " << out.initial_sup << ", worst excess " << out.worst_excess << " (tol "
      << out.tolerance << ")";
  if (out.first_violation) {
    const auto& row = rows[*out.first_violation];
    msg << "; first violation at t = " << row.t << " with sup " << row.*field;
  }
  out.message = msg.str();
  return out;
}

}  // namespace

bool DiagnosticsRow::finite() const {
  for (double v : {t, min_rho, max_rho, max_abs_rhox, f_sup, q_sup, momentum, g_residual, tail_fraction}) {
    if (!std::isfinite(v)) return false;
  }
  return std::all_of(k0.begin(), k0.end(), [](double v) { return std::isfinite(v); });
}

void DiagnosticsRecord::append(const DiagnosticsRow& row) {
  if (!rows_.empty() && !(row.t > rows_.back().t)) {
    throw ArgumentError("diagnostics rows must be strictly increasing in t");
  }
  rows_.push_back(row);
}

Bounds bounds_monitor(const SimState& state) { return {state.rho.min(), state.rho.max()}; }

PrincipleCheck maximum_principle_F(const DiagnosticsRecord& record) {
  return sup_principle(record, &DiagnosticsRow::f_sup, "F = G/rho");
}

PrincipleCheck transport_Q(const DiagnosticsRecord& record) {
  return sup_principle(record, &DiagnosticsRow::q_sup, "Q = F_x/rho");
}

double default_holder_r_max(const KernelSpec& kernel) { return std::min(kernel.r0, kPi / 2); }

ModulusScanner::ModulusScanner(const KernelSpec& kernel, std::size_t n, double r_max)
    : n_(n), r_max_(r_max) {
  const double dx = TorusField::spacing(n);
  if (!(r_max <= default_holder_r_max(kernel) * (1 + 1e-12))) {
    throw ArgumentError("holder r_max must not exceed min(r0, pi/2)");
  }
  holder_offsets_ = static_cast<std::size_t>(std::floor(r_max / dx * (1 + 1e-12)));
  const auto lip_offsets = static_cast<std::size_t>(std::floor(1.0 / dx));
  const std::size_t count = std::max(holder_offsets_, lip_offsets);
  mass_.assign(count + 1, 0.0);
  const bool vanishing = kernel.family == KernelFamily::none;
  for (std::size_t d = 1; d <= count; ++d) {
    mass_[d] = vanishing ? 0.0 : eval_M(kernel, static_cast<double>(d) * dx);
  }
}

double ModulusScanner::holder_constant(const TorusField& rho, double t, double beta) const {
  if (rho.size() != n_) throw ArgumentError("field size does not match the scanner grid");
  if (!(t >= 0)) throw ArgumentError("holder constant needs t >= 0");
  if (t == 0) return 0;
  double best = 0;
  for (std::size_t d = 2; d <= holder_offsets_; ++d) {
    double diff = 0;
    for (std::size_t i = 0; i < n_; ++i) diff = std::max(diff, std::abs(rho[i] - rho[(i + d) % n_]));
    best = std::max(best, diff * std::pow(mass_[d], beta));
  }
  return std::pow(t, beta) * best;
}

double ModulusScanner::m_lipschitz(const TorusField& u) const {
  if (u.size() != n_) throw ArgumentError("field size does not match the scanner grid");
  const double dx = TorusField::spacing(n_);
  double best = 0;
  for (std::size_t d = 1; d < mass_.size() && static_cast<double>(d) * dx <= 1.0; ++d) {
    const double scale = static_cast<double>(d) * dx * mass_[d];
    double diff = 0;
    for (std::size_t i = 0; i < n_; ++i) diff = std::max(diff, std::abs(u[i] - u[(i + d) % n_]));
    if (scale == 0) {
      if (diff > 0) return std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    best = std::max(best, diff / scale);
  }
  return best;
}

std::vector<double> holder_report(const SimState& state, const KernelSpec& kernel,
                                  std::span<const double> betas, double r_max) {
  if (!(r_max >= 2 * TorusField::spacing(state.size()))) {
    throw ArgumentError("holder window [2 dx, r_max] is below grid resolution");
  }
  const ModulusScanner scanner(kernel, state.size(), r_max);
  std::vector<double> out;
  out.reserve(betas.size());
  for (double beta : betas) out.push_back(scanner.holder_constant(state.rho, state.t, beta));
  return out;
}

double m_lipschitz_velocity(const SimState& state, const KernelSpec& kernel) {
  const ModulusScanner scanner(kernel, state.size(), default_holder_r_max(kernel));
  return scanner.m_lipschitz(state.u);
}

ThresholdTerms threshold_terms(const ICSpec& ic, const KernelSpec& kernel, std::size_t n) {
  validate(kernel);
  const auto mass = mass_at_origin(kernel);
  if (!mass) {
    throw ArgumentError("critical threshold is defined for integrable kernels only; " + describe(kernel) +
                        " is singular");
  }
  auto [rho0, u0] = sample_initial_data(ic, n);
  const Fourier<double> fourier(n);
  auto rho_hat = fourier.forward(rho0);
  if (*mass > 0) {
    const auto symbol = compute_symbol(kernel, n);
    for (Eigen::Index k = 0; k < rho_hat.size(); ++k) rho_hat[k] *= 2 * *mass - symbol.lambda[k];
  } else {
    rho_hat.setZero();
  }
  return {fourier.inverse(rho_hat), fourier.derivative(u0)};
}

ThresholdResult critical_threshold(const ICSpec& ic, const KernelSpec& kernel, std::size_t n) {
  const auto terms = threshold_terms(ic, kernel, n);
  const TorusField sigma = terms.velocity_gradient + terms.convolution;
  Eigen::Index arg = 0;
  const double min_sigma = sigma.values().minCoeff(&arg);
  return {min_sigma, sigma.x(static_cast<std::size_t>(arg)), min_sigma >= 0};
}

BlowupIndicator blowup_indicator(const SimState& state, double initial_max_abs_rhox, double dt) {
  const Fourier<double> fourier(state.size());
  const auto rho_hat = fourier.forward(state.rho);
  auto deriv = rho_hat;
  fourier.differentiate(deriv);
  BlowupIndicator out;
  out.max_abs_rhox = fourier.inverse(deriv).max_abs();
  out.tail_fraction = fourier.tail_fraction(rho_hat);
  if (!(out.tail_fraction <= kTailTripwire)) {
    out.fired = true;
    out.reason = "spectral tail fraction above 0.1";
  } else if (!(out.max_abs_rhox <= kGradientGrowthTripwire * (initial_max_abs_rhox + 1))) {
    out.fired = true;
    out.reason = "max |rho_x| grew beyond 1e3 (initial + 1)";
  } else if (!(dt >= kDtFloor)) {
    out.fired = true;
    out.reason = "adaptive time step below 1e-12";
  }
  return out;
}

BlowupMonitor::BlowupMonitor(const SimState& initial)
    : initial_(Fourier<double>(initial.size()).derivative(initial.rho).max_abs()) {}

BlowupIndicator BlowupMonitor::check(const SimState& state, double dt) const {
  return blowup_indicator(state, initial_, dt);
}

DiagnosticsProbe::DiagnosticsProbe(const KernelSpec& kernel, const Dynamics& dynamics, double holder_r_max)
    : dynamics_(&dynamics), scanner_(kernel, dynamics.size(), holder_r_max) {}

DiagnosticsRow DiagnosticsProbe::measure(const SimState& state) const {
  const auto& fourier = dynamics_->fourier();
  DiagnosticsRow row;
  row.t = state.t;
  row.min_rho = state.rho.min();
  row.max_rho = state.rho.max();
  const auto rho_hat = fourier.forward(state.rho);
  auto deriv = rho_hat;
  fourier.differentiate(deriv);
  row.max_abs_rhox = fourier.inverse(deriv).max_abs();
  const TorusField f = quotient(state.g, state.rho);
  row.f_sup = f.max_abs();
  row.q_sup = quotient(fourier.derivative(f), state.rho).max_abs();
  row.momentum = dynamics_->momentum(state);
  row.g_residual = dynamics_->consistency_residual(state);
  row.tail_fraction = fourier.tail_fraction(rho_hat);
  for (std::size_t i = 0; i < kHolderBetas.size(); ++i) {
    row.k0[i] = scanner_.holder_constant(state.rho, state.t, kHolderBetas[i]);
  }
  row.m_lipschitz = scanner_.m_lipschitz(state.u);
  return row;
}

double density_residual(const Dynamics& dynamics, const SimState& s0, const SimState& s1, const SimState& s2) {
  const double h = s1.t - s0.t;
  if (!(h > 0) || std::abs((s2.t - s1.t) - h) > 1e-9 * h) {
    throw ArgumentError("density residual needs three equally spaced states");
  }
  const auto& fourier = dynamics.fourier();
  auto forcing = [&](const SimState& s) {
    TorusField out = hadamard(s.u, fourier.derivative(s.rho));
    out += hadamard(s.rho, dynamics.apply_operator(s.rho));
    out += hadamard(s.g, s.rho);
    return out;
  };
  const TorusField mean_forcing = (1.0 / 6.0) * (forcing(s0) + 4.0 * forcing(s1) + forcing(s2));
  const TorusField residual = (1.0 / (2 * h)) * (s2.rho - s0.rho) + mean_forcing;
  return residual.max_abs();
}

}  // namespace alignlab
