#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "alignlab/simulation.hpp"

namespace alignlab {

/// Configuration problems: missing file, syntax (with line), unknown keys,
/// domain violations (with key path).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ExperimentKind { simulate, kernel_check, dichotomy, convergence, sweep };

std::string_view to_string(ExperimentKind kind);
std::optional<ExperimentKind> parse_experiment_kind(std::string_view name);

struct KernelCheckOptions {
  std::size_t grid_points = 4096;
  double grid_min = 1e-8;  // grid spans [grid_min, r0]
  double power_k = 2;
  std::optional<std::vector<std::string>> expected_failures;  // default per family
};

struct SweepAxis {
  std::string parameter;  // one of sweep_parameters()
  std::vector<double> values;
};

const std::vector<std::string>& sweep_parameters();

struct ConvergenceOptions {
  std::optional<double> dt;  // coarsest fixed step; default from an adaptive run
};

struct DichotomyOptions {
  KernelFamily integrable = KernelFamily::lipschitz_gaussian;
};

struct ExperimentPlan {
  ExperimentKind kind = ExperimentKind::simulate;
  RunConfig run;
  KernelCheckOptions check;
  SweepAxis sweep;
  ConvergenceOptions convergence;
  DichotomyOptions dichotomy;
  std::size_t workers = 1;
};

ExperimentPlan parse_config(const std::filesystem::path& path);
/// `source` names the text in error messages.
ExperimentPlan parse_config_string(const std::string& text, const std::string& source = "<config>");
/// As above, resolving relative table paths against `base_dir`.
ExperimentPlan parse_config_string_at(const std::string& text, const std::string& source,
                                      const std::filesystem::path& base_dir);

/// Plan with `parameter` set to `value` (sweep axes).
RunConfig with_parameter(const RunConfig& base, const std::string& parameter, double value);

std::size_t edit_distance(std::string_view a, std::string_view b);

}  // namespace alignlab
