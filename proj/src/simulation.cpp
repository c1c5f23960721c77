#include "alignlab/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "alignlab/errors.hpp"
#include "alignlab/io.hpp"

namespace alignlab {

namespace {

bool positive_finite(double v) { return v > 0 && std::isfinite(v); }

// Next multiple of `every` strictly after t (up to roundoff).
double next_tick(double t, double every) {
  const double k = std::floor(t / every * (1 + 1e-12) + 1e-12) + 1;
  return k * every;
}

bool reached(double t, double tick) { return t >= tick - 1e-12 * std::max(1.0, std::abs(tick)); }

}  // namespace

void validate(const RunConfig& config) {
  if (!is_power_of_two(config.n) || config.n < TorusField::kMinSize) {
    throw ArgumentError("n must be a power of two >= 32");
  }
  if (!positive_finite(config.t_end)) throw ArgumentError("t_end must be > 0");
  if (!(config.cfl > 0 && config.cfl <= 1)) throw ArgumentError("cfl must be in (0, 1]");
  if (!(config.dealias > 0 && config.dealias <= 1)) throw ArgumentError("dealias must be in (0, 1]");
  if (!positive_finite(config.snapshot_every)) throw ArgumentError("snapshot_every must be > 0");
  if (!positive_finite(config.diagnostics_every)) throw ArgumentError("diagnostics_every must be > 0");
  if (config.fixed_dt && !positive_finite(*config.fixed_dt)) throw ArgumentError("fixed_dt must be > 0");
  validate(config.kernel);
  validate(config.ic);
  if (config.holder_r_max) {
    const double r = *config.holder_r_max;
    if (!(r > 0 && r <= default_holder_r_max(config.kernel))) {
      throw ArgumentError("holder_r_max must be in (0, min(r0, pi/2)]");
    }
  }
}

SpectralSymbol symbol_for(const RunConfig& config) {
  if (config.symbol_cache.empty()) return compute_symbol(config.kernel, config.n, config.symbol_tol, config.workers);
  SymbolCache cache(config.symbol_cache);
  return cache.get_or_compute(config.kernel, config.n, config.symbol_tol, config.workers);
}

RunResult run(const RunConfig& config) {
  validate(config);
  const Dynamics dynamics(symbol_for(config), config.dealias);
  const DiagnosticsProbe probe(config.kernel, dynamics,
                               config.holder_r_max.value_or(default_holder_r_max(config.kernel)));

  RunResult result;
  SimState state = dynamics.init_state(config.ic);
  const BlowupMonitor monitor(state);
  result.initial_max_abs_rhox = monitor.initial_max_abs_rhox();
  result.record.append(probe.measure(state));
  result.snapshots.push_back(state);
  result.min_dt = std::numeric_limits<double>::infinity();

  double next_snapshot = config.snapshot_every;
  double next_diagnostics = config.diagnostics_every;
  while (!reached(state.t, config.t_end)) {
    const double cfl_dt = config.fixed_dt ? *config.fixed_dt
                                          : dynamics.adaptive_dt(state, config.cfl, config.snapshot_every);
    if (!(cfl_dt >= kDtFloor)) {
      result.status = RunStatus::blowup_detected;
      result.reason = "adaptive time step below 1e-12";
      break;
    }
    const double target = std::min({next_snapshot, next_diagnostics, config.t_end});
    const double remaining = target - state.t;
    const bool lands_on_tick = cfl_dt >= remaining * (1 - 1e-9);
    // Split the last two adaptive steps evenly rather than leaving a sliver.
    const bool split = !config.fixed_dt && remaining < 2 * cfl_dt;
    const double dt = lands_on_tick ? remaining : (split ? remaining / 2 : cfl_dt);
    state = dynamics.step(state, dt);
    if (lands_on_tick) state.t = target;
    result.min_dt = std::min(result.min_dt, dt);
    result.max_dt = std::max(result.max_dt, dt);

    if (auto terminal = classify(state)) {
      result.status = *terminal;
      result.reason = *terminal == RunStatus::positivity_lost ? "density reached zero" : "non-finite state";
      break;
    }
    const auto indicator = monitor.check(state, cfl_dt);
    if (indicator.fired) {
      result.status = RunStatus::blowup_detected;
      result.reason = indicator.reason;
      break;
    }
    if (reached(state.t, next_diagnostics)) {
      result.record.append(probe.measure(state));
      next_diagnostics = next_tick(state.t, config.diagnostics_every);
    }
    if (reached(state.t, next_snapshot)) {
      result.snapshots.push_back(state);
      next_snapshot = next_tick(state.t, config.snapshot_every);
    }
  }

  {
    if (result.record.back().t < state.t) result.record.append(probe.measure(state));
    if (result.snapshots.back().t < state.t) result.snapshots.push_back(state);
  }
  result.t_final = state.t;
  result.steps = state.steps;
  if (result.steps == 0) result.min_dt = 0;
  return result;
}

}  // namespace alignlab
