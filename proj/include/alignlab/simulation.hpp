#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "alignlab/diagnostics.hpp"
#include "alignlab/dynamics.hpp"
#include "alignlab/kernels.hpp"

namespace alignlab {

struct RunConfig {
  std::size_t n = 256;
  double t_end = 1;
  double cfl = 0.4;
  double dealias = kDefaultDealias;
  double snapshot_every = 0.1;
  double diagnostics_every = 0.1;
  KernelSpec kernel;
  ICSpec ic;
  double symbol_tol = kDefaultSymbolTol;
  std::optional<double> holder_r_max;  // default min(r0, pi/2)
  std::optional<double> fixed_dt;      // bypasses the CFL rule
  std::filesystem::path output_dir;
  std::filesystem::path symbol_cache;  // empty disables caching
  std::size_t workers = 1;             // symbol quadrature only
};

void validate(const RunConfig& config);

struct RunResult {
  std::vector<SimState> snapshots;
  DiagnosticsRecord record;
  RunStatus status = RunStatus::completed;
  std::string reason;  // empty when completed
  double t_final = 0;
  std::size_t steps = 0;
  double min_dt = 0;
  double max_dt = 0;
  double initial_max_abs_rhox = 0;
};

/// Integrates to t_end or the first terminal condition. Snapshots and
/// diagnostics rows land exactly on their cadence ticks; a terminated run
/// also records its final state.
RunResult run(const RunConfig& config);

/// Symbol for the config, loaded from or stored to the cache when enabled.
SpectralSymbol symbol_for(const RunConfig& config);

}  // namespace alignlab
