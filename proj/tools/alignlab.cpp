#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "alignlab/config.hpp"
#include "alignlab/experiments.hpp"

namespace {

struct Options {
  std::string config;
  std::string out;
  std::size_t workers = 0;
  std::uint64_t seed = 0;
  bool quiet = false;
};

std::filesystem::path output_root(const Options& opts, const alignlab::ExperimentPlan& plan) {
  if (!opts.out.empty()) return opts.out;
  if (!plan.run.output_dir.empty()) return plan.run.output_dir;
  if (const char* env = std::getenv("ALIGNLAB_OUT"); env && *env) return env;
  return "alignlab_out";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"alignlab: numerical laboratory for 1D Euler alignment with singular kernels"};
  app.require_subcommand(1);
  Options opts;

  const std::pair<const char*, alignlab::ExperimentKind> commands[] = {
      {"simulate", alignlab::ExperimentKind::simulate},
      {"kernel-check", alignlab::ExperimentKind::kernel_check},
      {"dichotomy", alignlab::ExperimentKind::dichotomy},
      {"convergence", alignlab::ExperimentKind::convergence},
      {"sweep", alignlab::ExperimentKind::sweep},
  };
  const char* help[] = {
      "run one simulation; writes snapshots, diagnostics.csv and summary.json",
      "audit kernel assumptions and lemmas; writes assessment.csv/json",
      "run the configured initial data with an integrable and a singular kernel",
      "temporal and spatial self-convergence study",
      "run the configured simulation over a parameter axis",
  };
  std::vector<CLI::App*> subs;
  for (std::size_t i = 0; i < std::size(commands); ++i) {
    auto* sub = app.add_subcommand(commands[i].first, help[i]);
    sub->add_option("--config", opts.config, "configuration file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", opts.out, "output directory (default: [run] output, $ALIGNLAB_OUT, ./alignlab_out)");
    sub->add_option("--workers", opts.workers, "worker threads (default: [experiment] workers)")
        ->check(CLI::PositiveNumber);
    sub->add_option("--seed", opts.seed, "reserved; all methods are deterministic");
    sub->add_flag("--quiet", opts.quiet, "suppress progress output");
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : alignlab::kExitUsage;
  }

  try {
    auto plan = alignlab::parse_config(opts.config);
    for (std::size_t i = 0; i < subs.size(); ++i) {
      if (subs[i]->parsed()) plan.kind = commands[i].second;
    }
    alignlab::CommandContext ctx;
    ctx.out = output_root(opts, plan);
    ctx.workers = opts.workers ? opts.workers : plan.workers;
    ctx.log = opts.quiet ? nullptr : &std::cerr;
    return alignlab::run_plan(plan, ctx);
  } catch (const alignlab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return alignlab::kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return alignlab::kExitUsage;
  }
}
