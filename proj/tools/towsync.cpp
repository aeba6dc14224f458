// Command-line front end: run, sweep, analyze.

#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "towsync/cli.hpp"

namespace {

struct CommonFlags {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> steps;

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "JSON config file (flat SimConfig keys)");
    app->add_option("--set", overrides, "KEY=VALUE override, repeatable; VALUE is JSON")->take_all();
    app->add_option("--seed", seed, "master seed");
    app->add_option("--steps", steps, "number of steps");
  }

  towsync::cli::ConfigSource source() const {
    towsync::cli::ConfigSource src;
    if (!config_path.empty()) src.path = config_path;
    src.overrides = overrides;
    src.seed = seed;
    src.steps = steps;
    return src;
  }

  bool explicit_config() const { return !config_path.empty() || !overrides.empty(); }
};

}  // namespace

int main(int argc, char** argv) {
  namespace cli = towsync::cli;

  CLI::App app{"Tug-of-war channel selection with phase-coupled scheduling"};
  app.require_subcommand(1);

  CommonFlags run_flags;
  std::string run_out = "out";
  auto* run_cmd = app.add_subcommand("run", "simulate one seed and write trace.csv, summary.json, manifest.json");
  run_flags.attach(run_cmd);
  run_cmd->add_option("--out", run_out, "output directory");

  CommonFlags sweep_flags;
  std::string sweep_out = "sweep";
  std::uint64_t seed_count = 1;
  unsigned workers = std::max(1u, std::thread::hardware_concurrency());
  std::vector<std::string> grid_specs;
  auto* sweep_cmd = app.add_subcommand("sweep", "run every grid point for a range of seeds");
  sweep_flags.attach(sweep_cmd);
  sweep_cmd->add_option("--seeds", seed_count, "number of consecutive seeds starting at --seed")
      ->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--grid", grid_specs, "KEY=[v1,v2,...] grid axis, repeatable")->take_all();
  sweep_cmd->add_option("--workers", workers, "concurrent runs")->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--out", sweep_out, "output directory");

  CommonFlags analyze_flags;
  std::string trace_path;
  std::string analyze_out;
  auto* analyze_cmd = app.add_subcommand("analyze", "recompute summary.json and phases.csv from a trace");
  analyze_cmd->add_option("trace", trace_path, "trace.csv produced by run")->required();
  analyze_flags.attach(analyze_cmd);
  analyze_cmd->add_option("--out", analyze_out, "output directory (default: <trace dir>/analysis)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) {
      return cli::cmd_run(cli::parse_config(run_flags.source()), run_out);
    }
    if (*sweep_cmd) {
      const auto base = cli::parse_config(sweep_flags.source());
      std::vector<cli::GridAxis> grid;
      for (const auto& spec : grid_specs) grid.push_back(cli::parse_grid_axis(spec));
      std::vector<std::uint64_t> seeds;
      for (std::uint64_t n = 0; n < seed_count; ++n) seeds.push_back(base.seed + n);
      return cli::cmd_sweep(base, grid, seeds, sweep_out, workers);
    }
    if (*analyze_cmd) {
      const std::filesystem::path trace(trace_path);
      towsync::SimConfig base;
      if (!analyze_flags.explicit_config()) {
        if (auto recorded = cli::manifest_config_near(trace)) base = *recorded;
      }
      const auto config = cli::parse_config(analyze_flags.source(), base);
      const std::filesystem::path out = analyze_out.empty() ? trace.parent_path() / "analysis" : std::filesystem::path(analyze_out);
      return cli::cmd_analyze(trace, config, out);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
