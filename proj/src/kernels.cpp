#include "alignlab/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include "alignlab/errors.hpp"
#include "alignlab/quadrature.hpp"

namespace alignlab {

namespace {

constexpr double kE = std::numbers::e;

struct FamilyName {
  KernelFamily family;
  std::string_view name;
};

constexpr std::array<FamilyName, 7> kFamilyNames = {{
    {KernelFamily::power, "power"},
    {KernelFamily::inverse_linear, "inverse_linear"},
    {KernelFamily::log_boosted, "log_boosted"},
    {KernelFamily::log_damped, "log_damped"},
    {KernelFamily::lipschitz_gaussian, "lipschitz_gaussian"},
    {KernelFamily::tabulated, "tabulated"},
    {KernelFamily::none, "none"},
}};

double log_factor(double r) { return std::log(kE + 1.0 / r); }

void require_positive_radius(double r) {
  if (!std::isfinite(r) || r <= 0) {
    throw DomainError("kernel evaluated at r = " + std::to_string(r) +
                      "; psi is singular at 0 and only defined for finite r");
  }
}

// Upper bound on int_Z^inf psi for Z >= 1, used to truncate the far field.
double far_field_bound(const KernelSpec& spec, double z) {
  switch (spec.family) {
    case KernelFamily::log_boosted: return log_factor(z) / (2 * z * z);
    case KernelFamily::log_damped: return 1.0 / (2 * z * z);
    default: return 0;
  }
}

// M(r) by quadrature in the logarithmic variable y = log s, panel by panel
// outward until the analytic far-field bound is negligible.
double tail_by_quadrature(const KernelSpec& spec, double r) {
  auto integrand = [&](double y) {
    const double s = std::exp(y);
    return eval_psi(spec, s) * s;
  };
  const double tol = spec.quad_tol;
  double total = 0;
  double error = 0;
  double a = r;
  double b = std::max(1.0, 2 * r);
  for (int panel = 0; panel < 200; ++panel) {
    const auto q = integrate_adaptive(integrand, std::log(a), std::log(b), 0.1 * tol);
    if (!q.converged) {
      throw NumericalError("tail mass quadrature did not converge at r = " + std::to_string(r),
                           q.error / std::max(std::abs(q.value), 1e-300));
    }
    total += q.value;
    error += q.error;
    if (far_field_bound(spec, b) < 0.1 * tol * total) {
      return total;
    }
    a = b;
    b *= 4;
  }
  throw NumericalError("tail mass far field did not decay below tolerance",
                       far_field_bound(spec, b) / total);
}

double tabulated_tail(const TabulatedKernel& table, double r, double tol) {
  if (r >= table.r_max()) return table.far_tail(r);
  auto integrand = [&](double y) {
    const double s = std::exp(y);
    return table.psi(s) * s;
  };
  double total = table.far_tail(table.r_max());
  const auto& knots = table.radii();
  // Integrate knot interval by knot interval: the interpolant is smooth within each.
  auto it = std::upper_bound(knots.begin(), knots.end(), r);
  double a = r;
  if (it == knots.begin()) {
    // r below the table: the near extrapolation is an exact power law.
    const double p = table.near_slope();
    const double b = knots.front();
    const double c = table.psi(b) / std::pow(b, p);
    total += std::abs(p + 1) < 1e-14 ? c * std::log(b / r)
                                     : c * (std::pow(b, p + 1) - std::pow(r, p + 1)) / (p + 1);
    a = b;
    it = knots.begin() + 1;
  }
  for (; it != knots.end(); ++it) {
    const auto q = integrate_adaptive(integrand, std::log(a), std::log(*it), 0.1 * tol);
    if (!q.converged) {
      throw NumericalError("tabulated tail quadrature did not converge", q.error / std::abs(q.value));
    }
    total += q.value;
    a = *it;
  }
  return total;
}

// Index of the first grid point at or above `target`, clamped to the last.
std::size_t index_at_least(std::span<const double> grid, double target) {
  const auto it = std::lower_bound(grid.begin(), grid.end(), target);
  return it == grid.end() ? grid.size() - 1 : static_cast<std::size_t>(it - grid.begin());
}

// A quantity sampled on an increasing grid counts as bounded toward r = 0
// when it grows by less than kBoundedGrowthPerDecade over the bottom decade.
bool bounded_toward_origin(std::span<const double> grid, const std::vector<double>& values) {
  for (double v : values) {
    if (!std::isfinite(v)) return false;
  }
  const std::size_t j = index_at_least(grid, 10 * grid.front());
  if (j == 0) return true;
  const double decades = std::log10(grid[j] / grid.front());
  const double allowed = std::pow(kBoundedGrowthPerDecade, decades);
  return std::abs(values.front()) <= allowed * std::abs(values[j]) + 1e-300;
}

int count_decreases(const std::vector<double>& values) {
  int violations = 0;
  for (std::size_t i = 0; i + 1 < values.size(); ++i) {
    if (values[i + 1] < values[i] * (1 - kMonotoneSlack)) ++violations;
  }
  return violations;
}

void validate_grid(std::span<const double> grid, std::size_t min_points) {
  if (grid.size() < min_points) {
    throw ArgumentError("radius grid needs at least " + std::to_string(min_points) + " points, got " +
                        std::to_string(grid.size()));
  }
  if (!(grid.front() > 0) || !std::isfinite(grid.back())) {
    throw ArgumentError("radius grid must be positive and finite");
  }
  if (!std::is_sorted(grid.begin(), grid.end()) ||
      std::adjacent_find(grid.begin(), grid.end()) != grid.end()) {
    throw ArgumentError("radius grid must be strictly increasing");
  }
}

}  // namespace

std::string_view to_string(KernelFamily family) {
  for (const auto& [f, name] : kFamilyNames) {
    if (f == family) return name;
  }
  return "unknown";
}

std::optional<KernelFamily> parse_kernel_family(std::string_view name) {
  for (const auto& [f, n] : kFamilyNames) {
    if (n == name) return f;
  }
  return std::nullopt;
}

std::vector<std::string_view> kernel_family_names() {
  std::vector<std::string_view> names;
  for (const auto& entry : kFamilyNames) names.push_back(entry.name);
  return names;
}

double default_r0(KernelFamily family) {
  switch (family) {
    case KernelFamily::inverse_linear: return 0.1;
    case KernelFamily::log_boosted: return 0.03;
    case KernelFamily::log_damped: return 0.2;
    case KernelFamily::lipschitz_gaussian: return 0.4;
    case KernelFamily::power:
    case KernelFamily::tabulated:
    case KernelFamily::none: return 0.5;
  }
  return 0.5;
}

// --- TabulatedKernel -------------------------------------------------------

TabulatedKernel::TabulatedKernel(std::vector<double> r, std::vector<double> psi)
    : r_(std::move(r)), psi_(std::move(psi)) {
  if (r_.size() != psi_.size() || r_.size() < 4) {
    throw ArgumentError("tabulated kernel needs at least 4 (r, psi) pairs");
  }
  for (std::size_t i = 0; i < r_.size(); ++i) {
    if (!(r_[i] > 0) || !(psi_[i] > 0) || !std::isfinite(r_[i]) || !std::isfinite(psi_[i])) {
      throw ArgumentError("tabulated kernel values must be positive and finite");
    }
    if (i > 0 && !(r_[i] > r_[i - 1])) throw ArgumentError("tabulated radii must increase");
    if (i > 0 && !(psi_[i] < psi_[i - 1])) {
      throw ArgumentError("tabulated psi must be strictly decreasing");
    }
  }
  const std::size_t n = r_.size();
  log_r_.resize(n);
  log_psi_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    log_r_[i] = std::log(r_[i]);
    log_psi_[i] = std::log(psi_[i]);
  }
  std::vector<double> secant(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    secant[i] = (log_psi_[i + 1] - log_psi_[i]) / (log_r_[i + 1] - log_r_[i]);
  }
  near_slope_ = secant.front();
  far_slope_ = secant.back();
  if (!(far_slope_ < -1)) {
    throw ArgumentError("tabulated kernel far-field log-slope must be < -1 for a finite tail mass");
  }
  // Fritsch-Carlson monotone slopes.
  slopes_.assign(n, 0);
  slopes_.front() = secant.front();
  slopes_.back() = secant.back();
  for (std::size_t i = 1; i + 1 < n; ++i) {
    slopes_[i] = 0.5 * (secant[i - 1] + secant[i]);
  }
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double a = slopes_[i] / secant[i];
    const double b = slopes_[i + 1] / secant[i];
    const double s = a * a + b * b;
    if (s > 9) {
      const double tau = 3 / std::sqrt(s);
      slopes_[i] = tau * a * secant[i];
      slopes_[i + 1] = tau * b * secant[i];
    }
  }
}

TabulatedKernel TabulatedKernel::load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot open kernel table " + path.string());
  std::vector<double> r, psi;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream row(line);
    double a = 0, b = 0;
    if (!(row >> a >> b)) {
      if (r.empty()) continue;  // header
      throw ArgumentError(path.string() + ":" + std::to_string(line_no) + ": expected 'r,psi'");
    }
    r.push_back(a);
    psi.push_back(b);
  }
  return TabulatedKernel(std::move(r), std::move(psi));
}

double TabulatedKernel::psi(double r) const {
  const double x = std::log(r);
  if (x <= log_r_.front()) return std::exp(log_psi_.front() + near_slope_ * (x - log_r_.front()));
  if (x >= log_r_.back()) return std::exp(log_psi_.back() + far_slope_ * (x - log_r_.back()));
  const auto it = std::upper_bound(log_r_.begin(), log_r_.end(), x);
  const std::size_t i = static_cast<std::size_t>(it - log_r_.begin()) - 1;
  const double h = log_r_[i + 1] - log_r_[i];
  const double t = (x - log_r_[i]) / h;
  const double t2 = t * t, t3 = t2 * t;
  const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
  const double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
  return std::exp(h00 * log_psi_[i] + h10 * h * slopes_[i] + h01 * log_psi_[i + 1] +
                  h11 * h * slopes_[i + 1]);
}

double TabulatedKernel::far_tail(double r) const {
  // psi(s) = psi(r) (s / r)^p with p < -1.
  return psi(r) * r / (-far_slope_ - 1);
}

std::optional<double> TabulatedKernel::near_mass(double r) const {
  if (!(near_slope_ > -1)) return std::nullopt;
  return psi(r) * r / (near_slope_ + 1);
}

// --- KernelSpec --------------------------------------------------------------

KernelSpec KernelSpec::make(KernelFamily family) {
  KernelSpec spec;
  spec.family = family;
  spec.r0 = default_r0(family);
  return spec;
}

KernelSpec KernelSpec::power(double alpha) {
  KernelSpec spec = make(KernelFamily::power);
  spec.alpha = alpha;
  return spec;
}

KernelSpec KernelSpec::tabulated(TabulatedKernel table) {
  KernelSpec spec = make(KernelFamily::tabulated);
  spec.table = std::make_shared<const TabulatedKernel>(std::move(table));
  return spec;
}

void validate(const KernelSpec& spec) {
  if (spec.family == KernelFamily::power && !(spec.alpha > 0 && spec.alpha < 2)) {
    throw ArgumentError("kernel.alpha must be in (0, 2)");
  }
  if (!(spec.r0 > 0 && spec.r0 <= 1)) throw ArgumentError("kernel.r0 must be in (0, 1]");
  if (!(spec.gamma > 0 && spec.gamma <= 0.5)) throw ArgumentError("kernel.gamma must be in (0, 1/2]");
  if (!(spec.quad_tol >= 1e-15 && spec.quad_tol <= 1e-3)) {
    throw ArgumentError("kernel.quad_tol must be in [1e-15, 1e-3]");
  }
  if (spec.family == KernelFamily::tabulated && !spec.table) {
    throw ArgumentError("tabulated kernel requires a table");
  }
}

std::string describe(const KernelSpec& spec) {
  std::ostringstream out;
  out.precision(17);
  out << "family=" << to_string(spec.family);
  if (spec.family == KernelFamily::power) out << ";alpha=" << spec.alpha;
  if (spec.family == KernelFamily::tabulated && spec.table) {
    out << ";table=";
    for (std::size_t i = 0; i < spec.table->radii().size(); ++i) {
      out << spec.table->radii()[i] << ':' << spec.table->values()[i] << ',';
    }
  }
  return out.str();
}

std::uint64_t kernel_hash(const KernelSpec& spec) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : describe(spec)) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

double eval_psi(const KernelSpec& spec, double r) {
  r = std::abs(r);
  require_positive_radius(r);
  switch (spec.family) {
    case KernelFamily::power: return std::pow(r, -1 - spec.alpha);
    case KernelFamily::inverse_linear: return 1.0 / (r * (1 + r * r));
    case KernelFamily::log_boosted: return log_factor(r) / (r * (1 + r * r));
    case KernelFamily::log_damped: return 1.0 / (r * log_factor(r) * (1 + r * r));
    case KernelFamily::lipschitz_gaussian: return std::exp(-0.5 * r * r);
    case KernelFamily::tabulated: return spec.table->psi(r);
    case KernelFamily::none: return 0;
  }
  return 0;
}

double eval_dpsi(const KernelSpec& spec, double r) {
  require_positive_radius(r);
  const double g = 1.0 / (r * (1 + r * r));
  const double dg = -(1 + 3 * r * r) / (r * r * (1 + r * r) * (1 + r * r));
  const double dlog = -1.0 / (r * (kE * r + 1));  // d/dr log(e + 1/r)
  switch (spec.family) {
    case KernelFamily::power: return -(1 + spec.alpha) * std::pow(r, -2 - spec.alpha);
    case KernelFamily::inverse_linear: return dg;
    case KernelFamily::log_boosted: return dlog * g + log_factor(r) * dg;
    case KernelFamily::log_damped: {
      const double l = log_factor(r);
      return dg / l - g * dlog / (l * l);
    }
    case KernelFamily::lipschitz_gaussian: return -r * std::exp(-0.5 * r * r);
    case KernelFamily::tabulated: {
      const double h = 1e-6 * r;
      return (spec.table->psi(r + h) - spec.table->psi(r - h)) / (2 * h);
    }
    case KernelFamily::none: return 0;
  }
  return 0;
}

double eval_M(const KernelSpec& spec, double r) {
  require_positive_radius(r);
  switch (spec.family) {
    case KernelFamily::power: return std::pow(r, -spec.alpha) / spec.alpha;
    case KernelFamily::inverse_linear: return 0.5 * std::log1p(1.0 / (r * r));
    case KernelFamily::lipschitz_gaussian:
      return std::sqrt(0.5 * std::numbers::pi) * std::erfc(r / std::numbers::sqrt2);
    case KernelFamily::log_boosted:
    case KernelFamily::log_damped: return tail_by_quadrature(spec, r);
    case KernelFamily::tabulated: return tabulated_tail(*spec.table, r, spec.quad_tol);
    case KernelFamily::none: return 0;
  }
  return 0;
}

std::optional<double> mass_at_origin(const KernelSpec& spec) {
  switch (spec.family) {
    case KernelFamily::lipschitz_gaussian: return std::sqrt(0.5 * std::numbers::pi);
    case KernelFamily::none: return 0.0;
    case KernelFamily::tabulated: {
      const double r1 = spec.table->r_min();
      const auto near = spec.table->near_mass(r1);
      if (!near) return std::nullopt;
      return *near + eval_M(spec, r1);
    }
    default: return std::nullopt;
  }
}

RadialProfile profile(const KernelSpec& spec) {
  RadialProfile p;
  p.psi = [spec](double r) { return eval_psi(spec, r); };
  p.tail = [spec](double r) { return eval_M(spec, r); };
  p.mass = mass_at_origin(spec);
  p.zero = spec.family == KernelFamily::none;
  p.name = describe(spec);
  return p;
}

RadialProfile operator+(const RadialProfile& a, const RadialProfile& b) {
  RadialProfile p;
  p.psi = [a, b](double r) { return a.psi(r) + b.psi(r); };
  p.tail = [a, b](double r) { return a.tail(r) + b.tail(r); };
  if (a.mass && b.mass) p.mass = *a.mass + *b.mass;
  p.zero = a.zero && b.zero;
  p.name = a.name + "+" + b.name;
  return p;
}

std::vector<double> log_grid(double lo, double hi, std::size_t count) {
  if (!(lo > 0) || !(hi > lo) || count < 2) throw ArgumentError("log_grid needs 0 < lo < hi, count >= 2");
  std::vector<double> grid(count);
  const double a = std::log(lo), b = std::log(hi);
  for (std::size_t i = 0; i < count; ++i) {
    grid[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1));
  }
  grid.front() = lo;
  grid.back() = hi;
  return grid;
}

// --- assessment --------------------------------------------------------------

bool KernelAssessment::sandwich_ok() const {
  return std::all_of(sandwich.begin(), sandwich.end(),
                     [](const SandwichProbe& p) { return p.upper_ok && p.lower_ok; });
}

std::map<std::string, bool> KernelAssessment::flags() const {
  return {
      {"sandwich_bounds", sandwich_ok()},
      {"non_integrable", non_integrable},
      {"hormander_mikhlin", hormander_mikhlin_ok},
      {"doubling_psi", doubling_psi_ok},
      {"doubling_M", doubling_M_ok},
      {"ratio_monotone", ratio_violations == 0},
      {"r_gamma_monotone", r_gamma_violations == 0},
  };
}

KernelAssessment check_assumptions(const KernelSpec& spec, std::span<const double> r_grid) {
  validate(spec);
  validate_grid(r_grid, 64);
  if (r_grid.back() > spec.r0 * (1 + 1e-12)) {
    throw ArgumentError("radius grid exceeds kernel.r0 = " + std::to_string(spec.r0));
  }
  if (spec.family == KernelFamily::none) throw DomainError("the zero kernel has no assumptions to check");

  KernelAssessment a;
  a.r.assign(r_grid.begin(), r_grid.end());
  const std::size_t n = a.r.size();
  for (auto* v : {&a.psi, &a.M, &a.hm_ratio, &a.doubling_psi, &a.doubling_M, &a.ratio_m_over_M,
                  &a.r_gamma_M}) {
    v->resize(n);
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double r = a.r[i];
    const double psi = eval_psi(spec, r);
    const double m = eval_M(spec, r);
    a.psi[i] = psi;
    a.M[i] = m;
    a.hm_ratio[i] = std::abs(r * eval_dpsi(spec, r)) / psi;
    a.doubling_psi[i] = psi / eval_psi(spec, 2 * r);
    a.doubling_M[i] = m / eval_M(spec, 2 * r);
    a.ratio_m_over_M[i] = r * psi / m;
    a.r_gamma_M[i] = std::pow(r, spec.gamma) * m;
  }

  for (double beta : kSandwichProbes) {
    SandwichProbe probe;
    probe.beta = beta;
    std::vector<double> upper(n), lower(n);
    for (std::size_t i = 0; i < n; ++i) {
      upper[i] = std::pow(a.r[i], 1 + beta) * a.psi[i];
      lower[i] = 1.0 / (std::pow(a.r[i], 1 - beta) * a.psi[i]);
    }
    probe.upper_constant = *std::max_element(upper.begin(), upper.end());
    probe.lower_constant = *std::max_element(lower.begin(), lower.end());
    probe.upper_ok = bounded_toward_origin(r_grid, upper);
    probe.lower_ok = bounded_toward_origin(r_grid, lower);
    a.sandwich.push_back(probe);
  }

  // M(0+) is finite when the increments of M over successive decades toward
  // the origin decay geometrically.
  a.origin_mass = mass_at_origin(spec);
  const double r1 = r_grid.front();
  const double d1 = eval_M(spec, r1) - eval_M(spec, 10 * r1);
  const double d2 = eval_M(spec, r1 / 10) - eval_M(spec, r1);
  a.non_integrable = d2 >= 0.5 * d1;

  a.hormander_mikhlin = *std::max_element(a.hm_ratio.begin(), a.hm_ratio.end());
  a.hormander_mikhlin_ok = bounded_toward_origin(r_grid, a.hm_ratio) && a.hormander_mikhlin > 0;
  a.doubling_psi_constant = *std::max_element(a.doubling_psi.begin(), a.doubling_psi.end());
  a.doubling_psi_ok = bounded_toward_origin(r_grid, a.doubling_psi) && a.doubling_psi_constant >= 1;
  a.doubling_M_constant = *std::max_element(a.doubling_M.begin(), a.doubling_M.end());
  a.doubling_M_ok = bounded_toward_origin(r_grid, a.doubling_M) && a.doubling_M_constant >= 1;
  a.ratio_violations = count_decreases(a.ratio_m_over_M);
  a.r_gamma_violations = count_decreases(a.r_gamma_M);
  return a;
}

double doubling_constant_M(const KernelSpec& spec, std::span<const double> r_grid) {
  validate_grid(r_grid, 1);
  double sup = 0;
  for (double r : r_grid) {
    const double m = eval_M(spec, r);
    const double m2 = eval_M(spec, 2 * r);
    if (!std::isfinite(m) || !std::isfinite(m2) || !(m2 > 0)) {
      throw NumericalError("M overflow or vanishing near r = " + std::to_string(r),
                           std::numeric_limits<double>::infinity());
    }
    sup = std::max(sup, m / m2);
  }
  return sup;
}

PowerInequality power_inequality_check(const KernelSpec& spec, double k,
                                       std::span<const double> r_grid) {
  if (!(k >= 1) || !std::isfinite(k)) throw ArgumentError("power exponent k must be >= 1");
  validate_grid(r_grid, 2);
  if (r_grid.back() >= 1) throw ArgumentError("power inequality grid must lie in (0, 1)");
  PowerInequality out;
  constexpr double kSmallest = std::numeric_limits<double>::min() * 1e10;
  std::size_t dropped = 0;
  for (double r : r_grid) {
    if (std::pow(r, 2 * k) < kSmallest) {
      ++dropped;
      continue;
    }
    out.grid.push_back(r);
  }
  if (dropped > 0) {
    out.warnings.push_back("dropped " + std::to_string(dropped) +
                           " radii whose powers r^(2k) underflow; grid shrunk");
  }
  if (out.grid.empty()) throw ArgumentError("every grid radius underflows at this exponent");

  std::vector<double> ratio_k, ratio_2k;
  for (double r : out.grid) {
    const double m = eval_M(spec, r);
    ratio_k.push_back(eval_M(spec, std::pow(r, k)) / std::pow(m, k));
    ratio_2k.push_back(eval_M(spec, std::pow(r, 2 * k)) / std::pow(m, 2 * k));
  }
  out.sup_ratio_k = *std::max_element(ratio_k.begin(), ratio_k.end());
  out.sup_ratio_2k = *std::max_element(ratio_2k.begin(), ratio_2k.end());
  // C1 C2^k = A_k and C1 C2^2k = A_2k.
  out.c2 = std::pow(out.sup_ratio_2k / out.sup_ratio_k, 1 / k);
  out.c1 = out.sup_ratio_k * out.sup_ratio_k / out.sup_ratio_2k;
  bool ok = std::isfinite(out.c1) && std::isfinite(out.c2) && out.c1 > 0 && out.c2 > 0;
  const double bound_k = out.c1 * std::pow(out.c2, k);
  const double bound_2k = out.c1 * std::pow(out.c2, 2 * k);
  for (std::size_t i = 0; ok && i < out.grid.size(); ++i) {
    ok = ratio_k[i] <= bound_k * (1 + 1e-12) && ratio_2k[i] <= bound_2k * (1 + 1e-12);
  }
  out.pass = ok;
  return out;
}

}  // namespace alignlab
