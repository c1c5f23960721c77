#include "alignlab/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "alignlab/errors.hpp"

namespace alignlab {

namespace pt = boost::property_tree;

namespace {

const std::map<std::string, std::vector<std::string>>& schema() {
  static const std::map<std::string, std::vector<std::string>> keys{
      {"run",
       {"n", "t_end", "cfl", "dealias", "snapshot_every", "diagnostics_every", "symbol_tol", "holder_r_max",
        "fixed_dt", "output", "symbol_cache"}},
      {"kernel", {"family", "alpha", "r0", "gamma", "quad_tol", "table"}},
      {"ic", {"preset", "steepness", "rho0", "u0"}},
      {"experiment", {"kind", "workers", "expected_failures", "grid_points", "grid_min", "power_k"}},
      {"sweep", {"parameter", "values"}},
      {"convergence", {"dt"}},
      {"dichotomy", {"integrable"}},
  };
  return keys;
}

std::string nearest(std::string_view word, const std::vector<std::string>& options) {
  std::string best;
  std::size_t best_distance = std::string::npos;
  for (const auto& option : options) {
    const std::size_t d = edit_distance(word, option);
    if (d < best_distance) {
      best_distance = d;
      best = option;
    }
  }
  return best;
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

class Reader {
 public:
  Reader(const pt::ptree& tree, std::string source) : tree_(tree), source_(std::move(source)) {}

  [[noreturn]] void fail(const std::string& key, const std::string& message) const {
    throw ConfigError(source_ + ": " + key + ": " + message);
  }

  std::optional<std::string> text(const std::string& key) const {
    if (auto v = tree_.get_optional<std::string>(pt::ptree::path_type(key, '.'))) return trim(*v);
    return std::nullopt;
  }

  std::optional<double> number(const std::string& key) const {
    auto t = text(key);
    if (!t) return std::nullopt;
    return parse_number(key, *t);
  }

  std::optional<std::size_t> count(const std::string& key) const {
    auto v = number(key);
    if (!v) return std::nullopt;
    if (!(*v >= 0) || *v != static_cast<double>(static_cast<std::size_t>(*v))) {
      fail(key, "expected a non-negative integer");
    }
    return static_cast<std::size_t>(*v);
  }

  std::optional<std::vector<double>> numbers(const std::string& key) const {
    auto t = text(key);
    if (!t) return std::nullopt;
    std::vector<double> out;
    for (const auto& item : split(*t)) out.push_back(parse_number(key, item));
    if (out.empty()) fail(key, "expected a comma-separated list of numbers");
    return out;
  }

  std::optional<std::vector<std::string>> words(const std::string& key) const {
    auto t = text(key);
    if (!t) return std::nullopt;
    return split(*t);
  }

  const std::string& source() const { return source_; }

 private:
  static std::vector<std::string> split(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
      item = trim(item);
      if (!item.empty()) out.push_back(item);
    }
    return out;
  }

  double parse_number(const std::string& key, const std::string& t) const {
    double v = 0;
    const auto* end = t.data() + t.size();
    const auto res = std::from_chars(t.data(), end, v);
    if (res.ec != std::errc() || res.ptr != end) fail(key, "expected a number, got '" + t + "'");
    return v;
  }

  const pt::ptree& tree_;
  std::string source_;
};

void check_keys(const pt::ptree& tree, const std::string& source) {
  std::vector<std::string> sections;
  for (const auto& [name, _] : schema()) sections.push_back(name);
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      throw ConfigError(source + ": key '" + section + "' must live inside a [section]");
    }
    const auto it = schema().find(section);
    if (it == schema().end()) {
      throw ConfigError(source + ": unknown section [" + section + "]; did you mean [" + nearest(section, sections) +
                        "]?");
    }
    for (const auto& [key, _] : body) {
      if (std::find(it->second.begin(), it->second.end(), key) == it->second.end()) {
        throw ConfigError(source + ": unknown key '" + section + "." + key + "'; did you mean '" + section + "." +
                          nearest(key, it->second) + "'?");
      }
    }
  }
}

KernelSpec read_kernel(const Reader& in, const std::filesystem::path& base_dir) {
  auto family_name = in.text("kernel.family");
  if (!family_name) in.fail("kernel.family", "required (one of power, inverse_linear, log_boosted, log_damped, lipschitz_gaussian, tabulated, none)");
  auto family = parse_kernel_family(*family_name);
  if (!family) {
    std::vector<std::string> names;
    for (auto n : kernel_family_names()) names.emplace_back(n);
    in.fail("kernel.family", "unknown family '" + *family_name + "'; did you mean '" + nearest(*family_name, names) + "'?");
  }
  KernelSpec spec = KernelSpec::make(*family);
  if (*family == KernelFamily::tabulated) {
    auto table = in.text("kernel.table");
    if (!table) in.fail("kernel.table", "required for the tabulated family");
    std::filesystem::path path(*table);
    if (path.is_relative()) path = base_dir / path;
    try {
      spec = KernelSpec::tabulated(TabulatedKernel::load_csv(path));
    } catch (const std::exception& e) {
      in.fail("kernel.table", e.what());
    }
  } else if (in.text("kernel.table")) {
    in.fail("kernel.table", "only valid for the tabulated family");
  }
  if (auto v = in.number("kernel.alpha")) spec.alpha = *v;
  if (auto v = in.number("kernel.r0")) spec.r0 = *v;
  if (auto v = in.number("kernel.gamma")) spec.gamma = *v;
  if (auto v = in.number("kernel.quad_tol")) spec.quad_tol = *v;
  try {
    validate(spec);
  } catch (const ArgumentError& e) {
    in.fail("kernel", e.what());
  }
  return spec;
}

ICSpec read_ic(const Reader& in) {
  auto preset_name = in.text("ic.preset");
  auto rho0 = in.numbers("ic.rho0");
  auto u0 = in.numbers("ic.u0");
  ICSpec ic;
  if (!preset_name) {
    if (!rho0) in.fail("ic.preset", "required (flat, shear, bump, supercritical, or custom with ic.rho0)");
    preset_name = "custom";
  }
  auto preset = parse_preset(*preset_name);
  if (!preset) in.fail("ic.preset", "unknown preset '" + *preset_name + "'");
  ic.preset = *preset;
  if (auto s = in.number("ic.steepness")) {
    if (ic.preset != ICSpec::Preset::supercritical) in.fail("ic.steepness", "only valid for the supercritical preset");
    ic.steepness = *s;
  }
  if (ic.preset == ICSpec::Preset::custom) {
    if (!rho0) in.fail("ic.rho0", "required for custom initial data");
    ic.rho0 = *rho0;
    ic.u0 = u0.value_or(std::vector<double>{});
  } else if (rho0 || u0) {
    in.fail("ic", "coefficient lists need preset = custom");
  }
  try {
    validate(ic);
  } catch (const ArgumentError& e) {
    in.fail("ic", e.what());
  }
  return ic;
}

}  // namespace

std::size_t edit_distance(std::string_view a, std::string_view b) {
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diagonal = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diagonal + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diagonal = up;
    }
  }
  return row[b.size()];
}

std::string_view to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::simulate: return "simulate";
    case ExperimentKind::kernel_check: return "kernel-check";
    case ExperimentKind::dichotomy: return "dichotomy";
    case ExperimentKind::convergence: return "convergence";
    case ExperimentKind::sweep: return "sweep";
  }
  return "unknown";
}

std::optional<ExperimentKind> parse_experiment_kind(std::string_view name) {
  for (auto k : {ExperimentKind::simulate, ExperimentKind::kernel_check, ExperimentKind::dichotomy,
                 ExperimentKind::convergence, ExperimentKind::sweep}) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

const std::vector<std::string>& sweep_parameters() {
  static const std::vector<std::string> names{"steepness", "n", "t_end", "cfl", "dealias", "alpha", "r0", "gamma"};
  return names;
}

RunConfig with_parameter(const RunConfig& base, const std::string& parameter, double value) {
  RunConfig c = base;
  if (parameter == "steepness") {
    c.ic = ICSpec::supercritical(value);
  } else if (parameter == "n") {
    c.n = static_cast<std::size_t>(value);
    if (static_cast<double>(c.n) != value) throw ArgumentError("sweep value for n must be an integer");
  } else if (parameter == "t_end") {
    c.t_end = value;
  } else if (parameter == "cfl") {
    c.cfl = value;
  } else if (parameter == "dealias") {
    c.dealias = value;
  } else if (parameter == "alpha") {
    c.kernel.alpha = value;
  } else if (parameter == "r0") {
    c.kernel.r0 = value;
  } else if (parameter == "gamma") {
    c.kernel.gamma = value;
  } else {
    throw ArgumentError("unknown sweep parameter '" + parameter + "'");
  }
  validate(c);
  return c;
}

ExperimentPlan parse_config_string(const std::string& text, const std::string& source) {
  return parse_config_string_at(text, source, std::filesystem::current_path());
}

ExperimentPlan parse_config_string_at(const std::string& text, const std::string& source,
                                      const std::filesystem::path& base_dir) {
  pt::ptree tree;
  std::istringstream stream(text);
  try {
    pt::read_ini(stream, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(source + ":" + std::to_string(e.line()) + ": syntax error: " + e.message());
  }
  check_keys(tree, source);
  const Reader in(tree, source);

  ExperimentPlan plan;
  if (auto kind = in.text("experiment.kind")) {
    auto parsed = parse_experiment_kind(*kind);
    if (!parsed) in.fail("experiment.kind", "unknown kind '" + *kind + "'");
    plan.kind = *parsed;
  }
  if (auto w = in.count("experiment.workers")) {
    if (*w == 0) in.fail("experiment.workers", "must be >= 1");
    plan.workers = *w;
  }

  RunConfig& run = plan.run;
  run.kernel = read_kernel(in, base_dir);
  run.ic = read_ic(in);
  if (auto v = in.count("run.n")) run.n = *v;
  if (auto v = in.number("run.t_end")) run.t_end = *v;
  if (auto v = in.number("run.cfl")) run.cfl = *v;
  if (auto v = in.number("run.dealias")) run.dealias = *v;
  if (auto v = in.number("run.snapshot_every")) run.snapshot_every = *v;
  if (auto v = in.number("run.diagnostics_every")) run.diagnostics_every = *v;
  if (auto v = in.number("run.symbol_tol")) run.symbol_tol = *v;
  run.holder_r_max = in.number("run.holder_r_max");
  run.fixed_dt = in.number("run.fixed_dt");
  if (auto v = in.text("run.output")) run.output_dir = *v;
  if (auto v = in.text("run.symbol_cache")) run.symbol_cache = *v;
  try {
    validate(run);
  } catch (const ArgumentError& e) {
    // Messages open with the offending field name.
    const std::string message = e.what();
    const std::string field = message.substr(0, message.find_first_not_of("abcdefghijklmnopqrstuvwxyz_"));
    in.fail(field.empty() ? "run" : "run." + field, message);
  }

  if (auto v = in.count("experiment.grid_points")) {
    if (*v < 64) in.fail("experiment.grid_points", "must be >= 64");
    plan.check.grid_points = *v;
  }
  if (auto v = in.number("experiment.grid_min")) {
    if (!(*v > 0 && *v < run.kernel.r0)) in.fail("experiment.grid_min", "must be in (0, kernel.r0)");
    plan.check.grid_min = *v;
  }
  if (auto v = in.number("experiment.power_k")) {
    if (!(*v >= 1)) in.fail("experiment.power_k", "must be >= 1");
    plan.check.power_k = *v;
  }
  if (auto v = in.words("experiment.expected_failures")) {
    const auto known = KernelAssessment{}.flags();
    for (const auto& flag : *v) {
      if (flag != "none" && !known.count(flag)) in.fail("experiment.expected_failures", "unknown flag '" + flag + "'");
    }
    std::vector<std::string> flags;
    std::copy_if(v->begin(), v->end(), std::back_inserter(flags), [](const auto& f) { return f != "none"; });
    plan.check.expected_failures = flags;
  }

  if (auto p = in.text("sweep.parameter")) {
    const auto& names = sweep_parameters();
    if (std::find(names.begin(), names.end(), *p) == names.end()) {
      in.fail("sweep.parameter", "unknown parameter '" + *p + "'; did you mean '" + nearest(*p, names) + "'?");
    }
    plan.sweep.parameter = *p;
  }
  if (auto values = in.numbers("sweep.values")) {
    for (double v : *values) {
      if (!std::isfinite(v)) in.fail("sweep.values", "values must be finite");
    }
    plan.sweep.values = *values;
  }
  if (plan.kind == ExperimentKind::sweep || !plan.sweep.parameter.empty() || !plan.sweep.values.empty()) {
    if (plan.sweep.parameter.empty() != plan.sweep.values.empty()) {
      in.fail("sweep", "parameter and values must be given together");
    }
    for (double v : plan.sweep.values) {
      try {
        with_parameter(run, plan.sweep.parameter, v);
      } catch (const ArgumentError& e) {
        in.fail("sweep.values", e.what());
      }
    }
  }

  if (auto dt = in.number("convergence.dt")) {
    if (!(*dt > 0 && std::isfinite(*dt))) in.fail("convergence.dt", "must be > 0");
    plan.convergence.dt = *dt;
  }
  if (auto name = in.text("dichotomy.integrable")) {
    auto family = parse_kernel_family(*name);
    if (!family) in.fail("dichotomy.integrable", "unknown family '" + *name + "'");
    if (*family == KernelFamily::tabulated || !mass_at_origin(KernelSpec::make(*family))) {
      in.fail("dichotomy.integrable", "family '" + *name + "' is not integrable");
    }
    plan.dichotomy.integrable = *family;
  }
  return plan;
}

ExperimentPlan parse_config(const std::filesystem::path& path) {
  std::ifstream file(path);
  if (!file) throw ConfigError("cannot read config file " + path.string());
  std::stringstream buf;
  buf << file.rdbuf();
  return parse_config_string_at(buf.str(), path.string(), path.parent_path());
}

}  // namespace alignlab
