#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "alignlab/dynamics.hpp"
#include "alignlab/kernels.hpp"

namespace alignlab {

inline constexpr std::array<double, 3> kHolderBetas{0.25, 0.5, 0.75};

struct DiagnosticsRow {
  double t = 0;
  double min_rho = 0;
  double max_rho = 0;
  double max_abs_rhox = 0;
  double f_sup = 0;  // sup |G / rho|
  double q_sup = 0;  // sup |(G / rho)_x / rho|
  double momentum = 0;
  double g_residual = 0;  // max |u_x - L rho - G|
  double tail_fraction = 0;
  std::array<double, 3> k0{};  // one per kHolderBetas entry
  double m_lipschitz = 0;      // NaN when M vanishes identically

  bool finite() const;
};

/// Time series with strictly increasing t.
class DiagnosticsRecord {
 public:
  void append(const DiagnosticsRow& row);

  const std::vector<DiagnosticsRow>& rows() const { return rows_; }
  std::size_t size() const { return rows_.size(); }
  bool empty() const { return rows_.empty(); }
  const DiagnosticsRow& front() const { return rows_.front(); }
  const DiagnosticsRow& back() const { return rows_.back(); }

 private:
  std::vector<DiagnosticsRow> rows_;
};

struct Bounds {
  double min_rho;
  double max_rho;
};

Bounds bounds_monitor(const SimState& state);

/// Outcome of a sup-norm principle over a record.
struct PrincipleCheck {
  bool pass = true;
  double initial_sup = 0;
  double tolerance = 0;    // 1e-4 sup(0) + 1e-8
  double worst_excess = 0; // max_t sup(t) - sup(0)
  std::optional<std::size_t> first_violation;  // row index
  std::string message;
};

PrincipleCheck maximum_principle_F(const DiagnosticsRecord& record);
PrincipleCheck transport_Q(const DiagnosticsRecord& record);

/// Precomputed tail masses at grid distances for the Hölder and M-Lipschitz
/// scans of one (kernel, n) pair.
class ModulusScanner {
 public:
  /// Hölder pairs span offsets with distance in [2 dx, r_max] (possibly
  /// none, giving K0 = 0); r_max must not exceed min(r0, pi/2).
  ModulusScanner(const KernelSpec& kernel, std::size_t n, double r_max);

  std::size_t size() const { return n_; }
  double r_max() const { return r_max_; }

  /// K0(beta) = t^beta max |rho(x) - rho(y)| M(|x - y|)^beta.
  double holder_constant(const TorusField& rho, double t, double beta) const;

  /// max over 0 < |x - y| <= 1 of |u(x) - u(y)| / (|x - y| M(|x - y|)).
  double m_lipschitz(const TorusField& u) const;

 private:
  std::size_t n_;
  double r_max_;
  std::size_t holder_offsets_;
  std::vector<double> mass_;  // mass_[d] = M(d dx) for d >= 1
};

/// Default Hölder window upper end: min(r0, pi/2).
double default_holder_r_max(const KernelSpec& kernel);

std::vector<double> holder_report(const SimState& state, const KernelSpec& kernel,
                                  std::span<const double> betas, double r_max);
double m_lipschitz_velocity(const SimState& state, const KernelSpec& kernel);

struct ThresholdResult {
  double min_sigma;
  double argmin_x;
  bool predicts_global;  // min sigma0 >= 0
};

/// The two parts of sigma0 = u0_x + psi * rho0 on an n-point grid.
struct ThresholdTerms {
  TorusField convolution;        // psi * rho0 via psi_hat_k = 2 M(0) - lambda_k
  TorusField velocity_gradient;  // u0_x
};

/// Integrable kernels only; singular kernels raise ArgumentError.
ThresholdTerms threshold_terms(const ICSpec& ic, const KernelSpec& kernel, std::size_t n);

/// sigma0 on an n-point grid; predicts global regularity iff min sigma0 >= 0.
ThresholdResult critical_threshold(const ICSpec& ic, const KernelSpec& kernel, std::size_t n = 1024);

inline constexpr double kTailTripwire = 0.1;
inline constexpr double kGradientGrowthTripwire = 1e3;
inline constexpr double kDtFloor = 1e-12;

struct BlowupIndicator {
  double max_abs_rhox = 0;
  double tail_fraction = 0;
  bool fired = false;
  std::string reason;
};

BlowupIndicator blowup_indicator(const SimState& state, double initial_max_abs_rhox, double dt);

/// Tripwires anchored at the initial gradient.
class BlowupMonitor {
 public:
  explicit BlowupMonitor(const SimState& initial);
  BlowupIndicator check(const SimState& state, double dt) const;
  double initial_max_abs_rhox() const { return initial_; }

 private:
  double initial_;
};

/// Evaluates full diagnostics rows for one run grid.
class DiagnosticsProbe {
 public:
  DiagnosticsProbe(const KernelSpec& kernel, const Dynamics& dynamics, double holder_r_max);
  DiagnosticsRow measure(const SimState& state) const;

 private:
  const Dynamics* dynamics_;
  ModulusScanner scanner_;
};

/// Density-equation residual over three equally spaced states: max of
/// |(rho2 - rho0)/(2h) + Simpson mean of (u rho_x + rho L rho + G rho)|.
double density_residual(const Dynamics& dynamics, const SimState& s0, const SimState& s1, const SimState& s2);

}  // namespace alignlab
