#include "alignlab/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "alignlab/errors.hpp"

namespace alignlab {

namespace {

constexpr double kTwoPi = 2 * std::numbers::pi;

}  // namespace

std::string_view to_string(ICSpec::Preset preset) {
  switch (preset) {
    case ICSpec::Preset::flat: return "flat";
    case ICSpec::Preset::shear: return "shear";
    case ICSpec::Preset::bump: return "bump";
    case ICSpec::Preset::supercritical: return "supercritical";
    case ICSpec::Preset::custom: return "custom";
  }
  return "unknown";
}

std::optional<ICSpec::Preset> parse_preset(std::string_view name) {
  for (auto p : {ICSpec::Preset::flat, ICSpec::Preset::shear, ICSpec::Preset::bump,
                 ICSpec::Preset::supercritical, ICSpec::Preset::custom}) {
    if (to_string(p) == name) return p;
  }
  return std::nullopt;
}

void validate(const ICSpec& ic) {
  if (!std::isfinite(ic.steepness)) throw ArgumentError("ic.steepness must be finite");
  if (ic.preset != ICSpec::Preset::custom) return;
  if (ic.rho0.empty()) throw ArgumentError("ic.rho0 needs at least the mean coefficient");
  for (const auto* list : {&ic.rho0, &ic.u0}) {
    for (double c : *list) {
      if (!std::isfinite(c)) throw ArgumentError("initial data coefficients must be finite");
    }
  }
  double rest = 0;
  for (std::size_t i = 1; i < ic.rho0.size(); ++i) rest += std::abs(ic.rho0[i]);
  if (!(ic.rho0[0] > rest)) {
    throw ArgumentError("ic.rho0 mean must exceed the sum of the other coefficient magnitudes");
  }
}

TorusField sample_fourier_series(const std::vector<double>& coefficients, std::size_t n) {
  return TorusField::sample(n, [&](double x) {
    if (coefficients.empty()) return 0.0;
    double v = coefficients[0];
    for (std::size_t i = 1; i < coefficients.size(); ++i) {
      const double k = static_cast<double>((i + 1) / 2);
      v += coefficients[i] * (i % 2 == 1 ? std::cos(k * x) : std::sin(k * x));
    }
    return v;
  });
}

std::pair<TorusField, TorusField> sample_initial_data(const ICSpec& ic, std::size_t n) {
  validate(ic);
  switch (ic.preset) {
    case ICSpec::Preset::flat: return {TorusField::constant(n, 1), TorusField::zeros(n)};
    case ICSpec::Preset::shear:
      return {TorusField::constant(n, 1), TorusField::sample(n, [](double x) { return -std::sin(x); })};
    case ICSpec::Preset::bump:
      return {TorusField::sample(n, [](double x) { return 1 + 0.5 * std::cos(x); }), TorusField::zeros(n)};
    case ICSpec::Preset::supercritical: {
      const double s = ic.steepness;
      return {TorusField::constant(n, 1), TorusField::sample(n, [s](double x) { return -s * std::sin(x); })};
    }
    case ICSpec::Preset::custom:
      return {sample_fourier_series(ic.rho0, n), sample_fourier_series(ic.u0, n)};
  }
  throw ArgumentError("unknown initial data preset");
}

std::string_view to_string(RunStatus status) {
  switch (status) {
    case RunStatus::completed: return "completed";
    case RunStatus::blowup_detected: return "blowup_detected";
    case RunStatus::positivity_lost: return "positivity_lost";
    case RunStatus::numerical_instability: return "numerical_instability";
  }
  return "unknown";
}

int exit_code(RunStatus status) {
  switch (status) {
    case RunStatus::completed: return 0;
    case RunStatus::blowup_detected: return 2;
    case RunStatus::positivity_lost: return 3;
    case RunStatus::numerical_instability: return 4;
  }
  return 1;
}

Dynamics::Dynamics(SpectralSymbol symbol, double dealias)
    : symbol_(std::move(symbol)), dealias_(dealias), fourier_(symbol_.n) {
  if (!(dealias_ > 0 && dealias_ <= 1)) throw ArgumentError("dealias must be in (0, 1]");
}

TorusField Dynamics::apply_operator(const TorusField& f) const {
  return apply_spectral(symbol_, f, fourier_);
}

SimState Dynamics::init_state(const ICSpec& ic) const {
  auto [rho0, u0] = sample_initial_data(ic, size());
  return init_state(rho0, u0);
}

SimState Dynamics::init_state(const TorusField& rho0, const TorusField& u0) const {
  if (rho0.size() != size() || u0.size() != size()) {
    throw ArgumentError("initial data size does not match the solver grid");
  }
  if (!(rho0.min() > 0)) throw DomainError("positivity of initial density required");
  SimState state;
  state.rho = rho0;
  state.g = fourier_.derivative(u0) - apply_operator(rho0);
  state.kappa = rho0.mean();
  state.nu = state.g.mean();
  state.p0 = kTwoPi * hadamard(rho0, u0).mean();
  state.u = recover_velocity(state);
  const double mismatch = (state.u - u0).max_abs();
  if (mismatch > 1e-10 * (1 + u0.max_abs())) {
    throw NumericalError("velocity recovery does not reproduce u0 (error " + std::to_string(mismatch) + ")",
                         mismatch);
  }
  state.u = u0;
  return state;
}

double Dynamics::dealiased_pairing(const Fourier<double>::Spectrum& a,
                                   const Fourier<double>::Spectrum& b) const {
  // mean of the pointwise product of the two truncated fields (Parseval).
  const std::size_t kmax = fourier_.cutoff(dealias_);
  const double n = static_cast<double>(size());
  double acc = (a[0] * std::conj(b[0])).real();
  for (std::size_t k = 1; k <= kmax; ++k) {
    const double w = k == size() / 2 ? 1.0 : 2.0;
    acc += w * (a[static_cast<Eigen::Index>(k)] * std::conj(b[static_cast<Eigen::Index>(k)])).real();
  }
  return acc / (n * n);
}

TorusField Dynamics::recover_velocity(const SimState& state) const {
  if (!(state.kappa != 0)) throw DomainError("mean density kappa = 0 (vacuum) is excluded");
  auto rho_hat = fourier_.forward(state.rho);
  auto phi_hat = rho_hat;
  fourier_.integrate(phi_hat);
  auto psi_hat = fourier_.forward(state.g);
  fourier_.integrate(psi_hat);

  const double rho_psi = kTwoPi * dealiased_pairing(rho_hat, psi_hat);
  const double i0 = (state.p0 - rho_psi) / (kTwoPi * state.kappa);

  apply_symbol(symbol_, phi_hat);
  Fourier<double>::Spectrum u_hat = phi_hat + psi_hat;
  u_hat[0] = static_cast<double>(size()) * i0;
  return fourier_.inverse(u_hat);
}

std::pair<TorusField, TorusField> Dynamics::rhs(const SimState& state) const {
  const auto u_t = fourier_.truncated(state.u, dealias_);
  const auto rho_t = fourier_.truncated(state.rho, dealias_);
  const auto g_t = fourier_.truncated(state.g, dealias_);
  auto flux_rho = fourier_.forward(hadamard(rho_t, u_t));
  auto flux_g = fourier_.forward(hadamard(g_t, u_t));
  fourier_.differentiate(flux_rho);
  fourier_.differentiate(flux_g);
  return {-1.0 * fourier_.inverse(flux_rho), -1.0 * fourier_.inverse(flux_g)};
}

SimState Dynamics::advance(const SimState& base, double base_weight, const SimState& stage,
                           double stage_weight, double dt) const {
  auto [drho, dg] = rhs(stage);
  SimState next = base;
  next.rho.values() = base_weight * base.rho.values() +
                      stage_weight * (stage.rho.values() + dt * drho.values());
  next.g.values() = base_weight * base.g.values() + stage_weight * (stage.g.values() + dt * dg.values());
  next.u = recover_velocity(next);
  return next;
}

SimState Dynamics::step(const SimState& state, double dt) const {
  if (!(dt > 0) || !std::isfinite(dt)) throw ArgumentError("time step must be positive and finite");
  const SimState s1 = advance(state, 0.0, state, 1.0, dt);
  const SimState s2 = advance(state, 0.75, s1, 0.25, dt);
  SimState out = advance(state, 1.0 / 3.0, s2, 2.0 / 3.0, dt);
  out.t = state.t + dt;
  out.steps = state.steps + 1;
  return out;
}

double Dynamics::stiffness_rate(const SimState& state) const {
  // Linearizing rho_t = -u rho_x - rho (L rho + G), G_t = -u G_x - G (L rho + G)
  // about a state gives the rank-one decay rate rho lambda_k + G per mode.
  const std::size_t kmax = fourier_.cutoff(dealias_);
  const double lambda_max = symbol_.lambda.head(static_cast<Eigen::Index>(kmax + 1)).maxCoeff();
  return (lambda_max * state.rho.values().cwiseAbs() + state.g.values().cwiseAbs()).maxCoeff();
}

double Dynamics::adaptive_dt(const SimState& state, double cfl, double cap) const {
  const double rate = stiffness_rate(state);
  const double stiff = rate > 0 ? kStiffnessSafety / rate : cap;
  return std::min(alignlab::adaptive_dt(state, cfl, cap), stiff);
}

double Dynamics::consistency_residual(const SimState& state) const {
  const auto ux = fourier_.derivative(state.u);
  return (ux - apply_operator(state.rho) - state.g).max_abs();
}

double Dynamics::momentum(const SimState& state) const {
  return kTwoPi * hadamard(state.rho, state.u).mean();
}

std::optional<RunStatus> classify(const SimState& state) {
  if (!state.rho.all_finite() || !state.g.all_finite() || !state.u.all_finite()) {
    return RunStatus::numerical_instability;
  }
  if (!(state.rho.min() > 0)) return RunStatus::positivity_lost;
  return std::nullopt;
}

SimState init_state(const ICSpec& ic, const KernelSpec& spec, std::size_t n) {
  return Dynamics(compute_symbol(spec, n)).init_state(ic);
}

TorusField recover_velocity(const SimState& state, const SpectralSymbol& symbol) {
  return Dynamics(symbol).recover_velocity(state);
}

std::pair<TorusField, TorusField> rhs(const SimState& state, const SpectralSymbol& symbol) {
  return Dynamics(symbol).rhs(state);
}

SimState step(const SimState& state, double dt, const SpectralSymbol& symbol) {
  return Dynamics(symbol).step(state, dt);
}

double adaptive_dt(const SimState& state, double cfl, double cap) {
  const double dt = cfl * state.u.dx() / (state.u.max_abs() + kVelocityFloor);
  return std::min(dt, cap);
}

}  // namespace alignlab
