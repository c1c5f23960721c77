#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "alignlab/config.hpp"
#include "alignlab/diagnostics.hpp"
#include "alignlab/kernels.hpp"
#include "alignlab/simulation.hpp"

namespace alignlab {

// Process exit codes. Stable public contract.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitBlowup = 2;
inline constexpr int kExitPositivity = 3;
inline constexpr int kExitInstability = 4;
inline constexpr int kExitNotAsymptotic = 5;
inline constexpr int kExitCheckFailed = 6;

struct CommandContext {
  std::filesystem::path out;
  std::size_t workers = 1;
  std::ostream* log = nullptr;  // progress and verdicts; null when quiet
};

/// Per-run summary (status, envelopes, K0 envelopes, principle verdicts,
/// threshold prediction for integrable kernels). Contains nothing
/// scheduling-dependent.
nlohmann::json run_summary(const RunConfig& config, const RunResult& result);

/// diagnostics.csv, summary.json and snapshots/ under `dir`.
void write_run_outputs(const std::filesystem::path& dir, const RunConfig& config, const RunResult& result);

std::vector<std::string> default_expected_failures(KernelFamily family);

struct KernelCheckReport {
  KernelAssessment assessment;
  double doubling_M = 0;
  bool doubling_lemma_ok = false;
  PowerInequality power;
  std::vector<std::string> expected_failures;
  std::vector<std::string> unexpected_failures;  // flagged, not expected
  std::vector<std::string> unexpected_passes;    // expected to fail, passed
  bool pass = false;
};

/// check_assumptions, the doubling lemma and the power inequality on a
/// log grid over [grid_min, r0].
KernelCheckReport kernel_check(const KernelSpec& spec, const KernelCheckOptions& options);

struct ConvergenceReport {
  std::array<double, 3> dts{};
  std::array<double, 2> temporal_discrepancy{};  // |dt - dt/2|, |dt/2 - dt/4|
  std::optional<double> temporal_order;
  std::array<std::size_t, 3> ns{};
  double spatial_dt = 0;
  std::array<double, 2> spatial_discrepancy{};  // |n - 2n|, |2n - 4n|
  std::optional<double> spatial_ratio;
  double roundoff_floor = 0;
  bool temporal_roundoff = false;
  bool spatial_roundoff = false;
  double max_tail_fraction = 0;
  bool asymptotic = true;
  bool pass = false;
  std::string verdict;
  int exit_code = kExitOk;
};

inline constexpr double kSmoothTail = 1e-6;
inline constexpr double kSpatialRatioMin = 10;
inline constexpr double kTemporalOrderMin = 2.7;
inline constexpr double kTemporalOrderMax = 3.3;

/// Fixed-step runs at dt, dt/2, dt/4 on n, and at n, 2n, 4n with step dt/4.
/// Without `dt`, the smallest step of an adaptive run on n is used.
ConvergenceReport convergence_study(const RunConfig& base, std::optional<double> dt, std::size_t workers = 1);

struct DichotomyReport {
  KernelSpec integrable_kernel;
  ThresholdResult prediction;
  std::optional<double> threshold_steepness;  // supercritical initial data only
  RunResult integrable;
  RunResult singular;
  bool prediction_matches = false;
  bool singular_regular = false;
  bool pass = false;
};

/// Smallest steepness s for which supercritical(s) violates the critical
/// threshold for an integrable kernel (bisection on min sigma0 = 0).
double threshold_steepness(const KernelSpec& integrable, std::size_t n = 1024);

DichotomyReport dichotomy_study(const RunConfig& base, KernelFamily integrable, std::size_t workers = 2);

int cmd_simulate(const ExperimentPlan& plan, const CommandContext& ctx);
int cmd_kernel_check(const ExperimentPlan& plan, const CommandContext& ctx);
int cmd_dichotomy(const ExperimentPlan& plan, const CommandContext& ctx);
int cmd_convergence(const ExperimentPlan& plan, const CommandContext& ctx);
int cmd_sweep(const ExperimentPlan& plan, const CommandContext& ctx);
int run_plan(const ExperimentPlan& plan, const CommandContext& ctx);

}  // namespace alignlab
