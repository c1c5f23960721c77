#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace alignlab {

enum class KernelFamily {
  power,               // r^(-1-alpha); comparison family outside the mildly singular class
  inverse_linear,      // 1 / (r (1 + r^2))
  log_boosted,         // log(e + 1/r) / (r (1 + r^2))
  log_damped,          // 1 / (r log(e + 1/r) (1 + r^2))
  lipschitz_gaussian,  // exp(-r^2 / 2), integrable
  tabulated,           // monotone cubic interpolation of samples in log-log coordinates
  none,                // psi = 0; pressureless (Burgers) control, test fixture only
};

std::string_view to_string(KernelFamily family);
std::optional<KernelFamily> parse_kernel_family(std::string_view name);
std::vector<std::string_view> kernel_family_names();

/// Radius on which the monotonicity assumptions hold for each family with
/// gamma = 1/2.
double default_r0(KernelFamily family);

/// Sampled kernel. Interpolates log psi against log r with a monotone
/// (Fritsch-Carlson) cubic; extrapolates linearly in log-log outside the
/// table. The far-field log-slope must be below -1 so that M stays finite.
class TabulatedKernel {
 public:
  TabulatedKernel(std::vector<double> r, std::vector<double> psi);

  /// Reads "r,psi" rows; blank lines and lines starting with '#' are skipped,
  /// as is a leading header row.
  static TabulatedKernel load_csv(const std::filesystem::path& path);

  double psi(double r) const;
  /// Exact integral of the far-field power law from R >= r_max() to infinity.
  double far_tail(double r) const;
  /// Integral of the near-origin power law from 0 to r <= r_min(), when finite.
  std::optional<double> near_mass(double r) const;

  double r_min() const { return r_.front(); }
  double r_max() const { return r_.back(); }
  double near_slope() const { return near_slope_; }
  double far_slope() const { return far_slope_; }
  const std::vector<double>& radii() const { return r_; }
  const std::vector<double>& values() const { return psi_; }

 private:
  std::vector<double> r_, psi_, log_r_, log_psi_, slopes_;
  double near_slope_ = 0, far_slope_ = 0;
};

struct KernelSpec {
  KernelFamily family = KernelFamily::inverse_linear;
  double alpha = 0.5;
  double r0 = 0.1;
  double gamma = 0.5;
  double quad_tol = 1e-12;
  std::shared_ptr<const TabulatedKernel> table;

  static KernelSpec make(KernelFamily family);
  static KernelSpec power(double alpha);
  static KernelSpec tabulated(TabulatedKernel table);
};

/// Throws ArgumentError naming the offending field.
void validate(const KernelSpec& spec);

/// Canonical text form, stable across platforms; used for cache keys.
std::string describe(const KernelSpec& spec);
/// FNV-1a hash of describe(spec).
std::uint64_t kernel_hash(const KernelSpec& spec);

/// psi(|r|). Throws DomainError for r = 0 or non-finite r.
double eval_psi(const KernelSpec& spec, double r);
/// psi'(r) for r > 0: analytic for built-in families, centered difference
/// with relative step 1e-6 for tabulated kernels.
double eval_dpsi(const KernelSpec& spec, double r);
/// M(r) = int_r^inf psi(s) ds for r > 0.
double eval_M(const KernelSpec& spec, double r);
/// M(0+) when psi is integrable, otherwise nullopt.
std::optional<double> mass_at_origin(const KernelSpec& spec);

/// Type-erased radial kernel consumed by the nonlocal operator. Profiles add
/// pointwise, which is how kernel sums are formed.
struct RadialProfile {
  std::function<double(double)> psi;
  std::function<double(double)> tail;
  std::optional<double> mass;  // finite M(0+) for integrable kernels
  bool zero = false;
  std::string name;
};

RadialProfile profile(const KernelSpec& spec);
RadialProfile operator+(const RadialProfile& a, const RadialProfile& b);

/// n log-spaced radii from lo to hi inclusive.
std::vector<double> log_grid(double lo, double hi, std::size_t count);

/// Sandwich bound psi(r) <= c / r^(1+beta) and psi(r) >= 1 / (c r^(1-beta)).
struct SandwichProbe {
  double beta = 0;
  double upper_constant = 0;  // sup r^(1+beta) psi
  double lower_constant = 0;  // sup 1 / (r^(1-beta) psi)
  bool upper_ok = false;
  bool lower_ok = false;
  double constant() const { return upper_constant > lower_constant ? upper_constant : lower_constant; }
};

struct KernelAssessment {
  std::vector<double> r;
  std::vector<double> psi, M, hm_ratio, doubling_psi, doubling_M, ratio_m_over_M, r_gamma_M;

  std::vector<SandwichProbe> sandwich;
  bool non_integrable = false;
  std::optional<double> origin_mass;
  double hormander_mikhlin = 0;
  bool hormander_mikhlin_ok = false;
  double doubling_psi_constant = 0;
  bool doubling_psi_ok = false;
  double doubling_M_constant = 0;
  bool doubling_M_ok = false;
  int ratio_violations = 0;
  int r_gamma_violations = 0;

  bool sandwich_ok() const;
  /// Named pass/fail flags: sandwich_bounds, non_integrable,
  /// hormander_mikhlin, doubling_psi, doubling_M, ratio_monotone,
  /// r_gamma_monotone.
  std::map<std::string, bool> flags() const;
};

inline constexpr double kMonotoneSlack = 1e-10;
/// Largest growth per decade toward r = 0 still read as bounded.
inline constexpr double kBoundedGrowthPerDecade = 1.05;
inline constexpr std::array<double, 4> kSandwichProbes = {0.1, 0.25, 0.5, 1.0};

/// Requires a sorted grid of at least 64 radii in (0, r0].
KernelAssessment check_assumptions(const KernelSpec& spec, std::span<const double> r_grid);

/// sup over the grid of M(r) / M(2r). The grid must be sorted and positive.
double doubling_constant_M(const KernelSpec& spec, std::span<const double> r_grid);

struct PowerInequality {
  double c1 = 0;
  double c2 = 0;
  bool pass = false;
  double sup_ratio_k = 0;   // sup M(r^k) / M(r)^k
  double sup_ratio_2k = 0;  // sup M(r^2k) / M(r)^2k
  std::vector<double> grid;  // grid actually used
  std::vector<std::string> warnings;
};

/// Fits the smallest (C1, C2) with M(r^j) <= C1 C2^j M(r)^j for j in {k, 2k}
/// over the grid and checks the bound pointwise. Radii whose powers
/// underflow are dropped with a warning.
PowerInequality power_inequality_check(const KernelSpec& spec, double k,
                                       std::span<const double> r_grid);

}  // namespace alignlab
