#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "alignlab/fourier.hpp"
#include "alignlab/kernels.hpp"
#include "alignlab/nonlocal_operator.hpp"
#include "alignlab/torus_field.hpp"

namespace alignlab {

/// Initial data. Coefficient lists describe a0 + sum_k (a_k cos kx + b_k sin kx)
/// as [a0, a1, b1, a2, b2, ...].
struct ICSpec {
  enum class Preset { flat, shear, bump, supercritical, custom };

  Preset preset = Preset::flat;
  double steepness = 5;  // supercritical only
  std::vector<double> rho0;
  std::vector<double> u0;

  static ICSpec flat() { return {}; }
  static ICSpec shear() { return {Preset::shear, 5, {}, {}}; }
  static ICSpec bump() { return {Preset::bump, 5, {}, {}}; }
  static ICSpec supercritical(double steepness) { return {Preset::supercritical, steepness, {}, {}}; }
  static ICSpec custom(std::vector<double> rho0, std::vector<double> u0) {
    return {Preset::custom, 5, std::move(rho0), std::move(u0)};
  }
};

std::string_view to_string(ICSpec::Preset preset);
std::optional<ICSpec::Preset> parse_preset(std::string_view name);

/// Throws ArgumentError for non-finite coefficients or a density whose mean
/// does not exceed the sum of the other coefficient magnitudes.
void validate(const ICSpec& ic);

/// Samples a coefficient list on the n-point grid.
TorusField sample_fourier_series(const std::vector<double>& coefficients, std::size_t n);

/// (rho0, u0) on the grid.
std::pair<TorusField, TorusField> sample_initial_data(const ICSpec& ic, std::size_t n);

struct SimState {
  double t = 0;
  TorusField rho;
  TorusField g;  // G = u_x - L rho
  double kappa = 0;  // mean of rho
  double nu = 0;     // mean of G
  double p0 = 0;     // int rho0 u0 dx
  TorusField u;      // recovered velocity, refreshed after every update
  std::size_t steps = 0;

  std::size_t size() const { return rho.size(); }
};

enum class RunStatus { completed, blowup_detected, positivity_lost, numerical_instability };

std::string_view to_string(RunStatus status);
int exit_code(RunStatus status);

inline constexpr double kDefaultDealias = 2.0 / 3.0;
inline constexpr double kVelocityFloor = 1e-12;
/// dt times the stiff decay rate stays below this, well inside the real-axis
/// stability interval [-2.51, 0] of SSP-RK3.
inline constexpr double kStiffnessSafety = 1.0;

/// The rho-G system on one grid: owns the symbol, the transforms and the
/// dealiasing fraction. Not thread-safe (transform plans are cached);
/// give each worker its own instance.
class Dynamics {
 public:
  explicit Dynamics(SpectralSymbol symbol, double dealias = kDefaultDealias);

  std::size_t size() const { return symbol_.n; }
  double dealias() const { return dealias_; }
  const SpectralSymbol& symbol() const { return symbol_; }
  const Fourier<double>& fourier() const { return fourier_; }

  SimState init_state(const ICSpec& ic) const;
  SimState init_state(const TorusField& rho0, const TorusField& u0) const;

  /// u = L Phi + Psi + I0 with Phi, Psi the mean-zero primitives of rho - kappa
  /// and G - nu and I0 = (P0 - int rho Psi) / (2 pi kappa).
  TorusField recover_velocity(const SimState& state) const;

  /// (d rho/dt, dG/dt) = (-(rho u)_x, -(G u)_x) with dealiased factors.
  std::pair<TorusField, TorusField> rhs(const SimState& state) const;

  /// One SSP-RK3 step. The returned state may be non-finite or non-positive;
  /// see classify().
  SimState step(const SimState& state, double dt) const;

  /// The CFL step, further limited so dt * stiffness_rate stays below
  /// kStiffnessSafety.
  double adaptive_dt(const SimState& state, double cfl, double cap) const;

  /// max_x (lambda_max rho + |G|) over the dealiased modes.
  double stiffness_rate(const SimState& state) const;

  /// max |u_x - L rho - G|.
  double consistency_residual(const SimState& state) const;

  /// 2 pi mean(rho u).
  double momentum(const SimState& state) const;

  TorusField apply_operator(const TorusField& f) const;

 private:
  SimState advance(const SimState& base, double base_weight, const SimState& stage, double stage_weight,
                   double dt) const;
  double dealiased_pairing(const Fourier<double>::Spectrum& a, const Fourier<double>::Spectrum& b) const;

  SpectralSymbol symbol_;
  double dealias_;
  Fourier<double> fourier_;
};

/// Terminal status of a state, if any: non-finite values first, then
/// density positivity.
std::optional<RunStatus> classify(const SimState& state);

// Free-function forms, constructing a Dynamics per call.
SimState init_state(const ICSpec& ic, const KernelSpec& spec, std::size_t n);
TorusField recover_velocity(const SimState& state, const SpectralSymbol& symbol);
std::pair<TorusField, TorusField> rhs(const SimState& state, const SpectralSymbol& symbol);
SimState step(const SimState& state, double dt, const SpectralSymbol& symbol);
/// Pure CFL rule cfl dx / (max|u| + floor), capped above.
double adaptive_dt(const SimState& state, double cfl, double cap);

}  // namespace alignlab
