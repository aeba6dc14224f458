#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "towsync/analysis.hpp"
#include "towsync/config.hpp"
#include "towsync/engine.hpp"
#include "towsync/error.hpp"
#include "towsync/io.hpp"

namespace towsync::cli {

namespace fs = std::filesystem;
using nlohmann::json;

inline constexpr std::string_view kToolVersion = "towsync 1.0.0";

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
  if (!out) throw Error("cannot write " + path.string());
}

struct ConfigSource {
  std::optional<fs::path> path;
  std::vector<std::string> overrides;  // KEY=VALUE, applied in order
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> steps;
};

// File values, then --set overrides, then --seed/--steps; validated.
inline SimConfig parse_config(const ConfigSource& src, SimConfig base = {}) {
  SimConfig config = src.path ? io::parse_config_text(read_file(*src.path), std::move(base)) : std::move(base);
  for (const auto& o : src.overrides) {
    const auto [key, value] = io::parse_override(o);
    io::apply_setting(config, key, value);
  }
  if (src.seed) config.seed = *src.seed;
  if (src.steps) config.steps = *src.steps;
  config.validate();
  return config;
}

inline json manifest_json(const SimConfig& config, const std::vector<std::uint64_t>& seeds, const json& outputs) {
  return {{"tool_version", kToolVersion}, {"config", io::config_to_json(config)}, {"seeds", seeds},
          {"outputs", outputs}};
}

/**
 * Runs one simulation into `out_dir`: trace.csv, summary.json and
 * manifest.json. Returns the summary.
 */
inline RunSummary run_to_directory(const SimConfig& config, const fs::path& out_dir) {
  config.validate();
  fs::create_directories(out_dir);
  std::ofstream trace(out_dir / "trace.csv", std::ios::binary);
  if (!trace) throw Error("cannot write " + (out_dir / "trace.csv").string());
  io::CsvTraceSink csv(trace);
  SummaryAccumulator acc(config);
  TraceSink* sinks[] = {&csv, &acc};
  run(config, sinks);
  trace.close();
  if (!trace) throw Error("cannot write " + (out_dir / "trace.csv").string());

  if (config.steps == 0) {
    write_file(out_dir / "summary.json", json{{"seed", config.seed}, {"config", io::config_to_json(config)}}.dump(2) + "\n");
    write_file(out_dir / "manifest.json",
               manifest_json(config, {config.seed}, {{"trace", "trace.csv"}, {"summary", "summary.json"}}).dump(2) +
                   "\n");
    return {};
  }
  const RunSummary summary = acc.summary();
  write_file(out_dir / "summary.json", io::summary_to_json(summary, config).dump(2) + "\n");
  write_file(out_dir / "manifest.json",
             manifest_json(config, {config.seed}, {{"trace", "trace.csv"}, {"summary", "summary.json"}}).dump(2) + "\n");
  return summary;
}

inline int cmd_run(const SimConfig& config, const fs::path& out_dir, std::ostream& err = std::cerr) {
  try {
    run_to_directory(config, out_dir);
    return 0;
  } catch (const std::exception& e) {
    err << "run failed: " << e.what() << '\n';
    return 1;
  }
}

// The config recorded by a previous run next to `trace_path`, if any.
inline std::optional<SimConfig> manifest_config_near(const fs::path& trace_path) {
  const fs::path manifest = trace_path.parent_path() / "manifest.json";
  if (!fs::exists(manifest)) return std::nullopt;
  const json doc = io::parse_json_text(read_file(manifest), "manifest");
  if (!doc.contains("config")) throw ConfigError("manifest", "missing config");
  return io::config_from_json(doc.at("config"));
}

/**
 * Recomputes summary.json from a trace and writes phases.csv (degrees).
 * node_count follows the trace when it disagrees with `config`.
 */
inline RunSummary analyze_to_directory(const fs::path& trace_path, SimConfig config, const fs::path& out_dir) {
  std::ifstream in(trace_path, std::ios::binary);
  if (!in) throw Error("cannot open " + trace_path.string());
  const auto trace = io::read_trace(in);
  if (trace.empty()) throw ConfigError("trace", "trace has no records");
  std::size_t nodes = 0;
  for (const auto& r : trace) nodes = std::max(nodes, r.node + 1);
  if (nodes != config.node_count) {
    config.node_count = nodes;
    config.initial_phases.reset();
  }
  config.validate();
  const RunSummary summary = accumulate(trace, config).summary();
  fs::create_directories(out_dir);
  write_file(out_dir / "summary.json", io::summary_to_json(summary, config).dump(2) + "\n");
  std::ofstream phases(out_dir / "phases.csv", std::ios::binary);
  io::write_phases(phases, trace);
  if (!phases) throw Error("cannot write " + (out_dir / "phases.csv").string());
  return summary;
}

inline int cmd_analyze(const fs::path& trace_path, const SimConfig& config, const fs::path& out_dir,
                       std::ostream& err = std::cerr) {
  try {
    analyze_to_directory(trace_path, config, out_dir);
    return 0;
  } catch (const std::exception& e) {
    err << "analyze failed: " << e.what() << '\n';
    return 1;
  }
}

// One axis of a sweep grid: a config key and the values it takes.
struct GridAxis {
  std::string key;
  std::vector<json> values;
};

// "KEY=[v1,v2,...]"
inline GridAxis parse_grid_axis(const std::string& assignment) {
  auto [key, value] = io::parse_override(assignment);
  if (!value.is_array() || value.empty()) throw ConfigError(key, "grid values must be a non-empty JSON array");
  return {key, std::vector<json>(value.begin(), value.end())};
}

struct SweepRow {
  std::size_t run = 0;
  std::uint64_t seed = 0;
  std::vector<json> params;
  std::optional<RunSummary> summary;
  std::string error;
};

inline std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

/**
 * Every (grid point x seed) run, each in out_dir/run_NNNN. Runs execute on up
 * to `workers` threads; sweep.csv is written once all have finished, one row
 * per run in run order. Returns the number of failed runs.
 */
inline std::size_t sweep_to_directory(const SimConfig& base, const std::vector<GridAxis>& grid,
                                      const std::vector<std::uint64_t>& seeds, const fs::path& out_dir,
                                      unsigned workers) {
  if (seeds.empty()) throw ConfigError("seeds", "at least one seed required");
  std::size_t points = 1;
  for (const auto& axis : grid) points *= axis.values.size();

  std::vector<SweepRow> rows;
  for (std::size_t p = 0; p < points; ++p) {
    std::vector<json> params;
    std::size_t rest = p;
    for (auto axis = grid.rbegin(); axis != grid.rend(); ++axis) {
      params.insert(params.begin(), axis->values[rest % axis->values.size()]);
      rest /= axis->values.size();
    }
    for (std::uint64_t seed : seeds) rows.push_back({rows.size(), seed, params, std::nullopt, {}});
  }

  fs::create_directories(out_dir);
  auto run_dir = [&](std::size_t run) {
    std::string name = std::to_string(run);
    return out_dir / ("run_" + std::string(name.size() < 4 ? 4 - name.size() : 0, '0') + name);
  };

  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t r = next++; r < rows.size(); r = next++) {
      SweepRow& row = rows[r];
      try {
        SimConfig config = base;
        for (std::size_t a = 0; a < grid.size(); ++a) io::apply_setting(config, grid[a].key, row.params[a]);
        config.seed = row.seed;
        config.validate();
        row.summary = run_to_directory(config, run_dir(r));
      } catch (const std::exception& e) {
        row.error = e.what();
      }
    }
  };
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(rows.size())));
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  std::ostringstream csv;
  csv << "run,seed";
  for (const auto& axis : grid) csv << ',' << csv_quote(axis.key);
  csv << ",mean_success_per_step,group_count,min_gap,lock_drift,status\n";
  std::size_t failed = 0;
  json runs = json::array();
  for (const auto& row : rows) {
    csv << row.run << ',' << row.seed;
    for (const auto& p : row.params) csv << ',' << csv_quote(p.dump());
    if (row.summary && row.summary->throughput.steps > 0) {
      const auto& s = *row.summary;
      csv << ',' << io::format_double(s.throughput.mean_success_per_step) << ',' << s.groups.group_count() << ','
          << (s.groups.min_intergroup_gap ? io::format_double(*s.groups.min_intergroup_gap) : "") << ','
          << (s.lock.max_drift ? io::format_double(*s.lock.max_drift) : "") << ",ok\n";
    } else if (row.summary) {
      csv << ",,,,,ok\n";
    } else {
      ++failed;
      csv << ",,,,," << csv_quote("error: " + row.error) << '\n';
    }
    runs.push_back({{"run", row.run}, {"seed", row.seed}, {"params", row.params},
                    {"dir", run_dir(row.run).filename().string()}});
  }
  write_file(out_dir / "sweep.csv", csv.str());

  json manifest = manifest_json(base, seeds, {{"aggregate", "sweep.csv"}, {"runs", runs}});
  json axes = json::object();
  for (const auto& axis : grid) axes[axis.key] = axis.values;
  manifest["grid"] = axes;
  write_file(out_dir / "manifest.json", manifest.dump(2) + "\n");
  return failed;
}

inline int cmd_sweep(const SimConfig& base, const std::vector<GridAxis>& grid, const std::vector<std::uint64_t>& seeds,
                     const fs::path& out_dir, unsigned workers, std::ostream& err = std::cerr) {
  try {
    const std::size_t failed = sweep_to_directory(base, grid, seeds, out_dir, workers);
    if (failed > 0) {
      err << "sweep: " << failed << " run(s) failed; see sweep.csv\n";
      return 1;
    }
    return 0;
  } catch (const std::exception& e) {
    err << "sweep failed: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace towsync::cli
