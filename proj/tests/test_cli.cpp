#include <catch_amalgamated.hpp>

#include <algorithm>
#include <filesystem>
#include <map>
#include <sstream>
#include <string>

#include "towsync/cli.hpp"

using namespace towsync;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("towsync_test_cli_" + name);
  fs::remove_all(p);
  return p;
}

std::size_t line_count(const fs::path& p) {
  const std::string text = cli::read_file(p);
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::istringstream in(cli::read_file(p));
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

SimConfig short_config(std::uint64_t steps, std::uint64_t seed = 1) {
  SimConfig c;
  c.steps = steps;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("parse_config layers file, overrides and flags") {
  const fs::path dir = scratch("config");
  fs::create_directories(dir);
  cli::write_file(dir / "empty.json", "");
  CHECK(cli::parse_config({dir / "empty.json", {}, {}, {}}) == SimConfig{});

  cli::write_file(dir / "c.json", R"({"node_count": 12, "seed": 5, "steps": 7})");
  const auto c = cli::parse_config({dir / "c.json", {"node_count=40", "channel_count=5"}, 9, std::nullopt});
  CHECK(c.node_count == 40);
  CHECK(c.channel_count == 5);
  CHECK(c.seed == 9);
  CHECK(c.steps == 7);

  try {
    cli::parse_config({std::nullopt, {"channel_probs=[0.1,0.2]"}, {}, {}});
    FAIL("expected a validation error");
  } catch (const ConfigError& e) {
    CHECK(e.field() == "channel_probs");
  }
  CHECK_THROWS_AS(cli::parse_config({dir / "missing.json", {}, {}, {}}), Error);
}

TEST_CASE("cmd_run outputs") {
  SECTION("zero steps writes a header-only trace") {
    const fs::path out = scratch("run0");
    REQUIRE(cli::cmd_run(short_config(0), out) == 0);
    CHECK(cli::read_file(out / "trace.csv") == "t,node,phase,channel,collided,success,reward,gated\n");
    CHECK(fs::exists(out / "summary.json"));
    CHECK(fs::exists(out / "manifest.json"));
  }

  SECTION("row count and byte-identical reruns") {
    const fs::path a = scratch("run_a");
    const fs::path b = scratch("run_b");
    REQUIRE(cli::cmd_run(short_config(300, 8), a) == 0);
    REQUIRE(cli::cmd_run(short_config(300, 8), b) == 0);
    CHECK(line_count(a / "trace.csv") == 1 + 300 * 10);
    CHECK(cli::read_file(a / "trace.csv") == cli::read_file(b / "trace.csv"));
    CHECK(cli::read_file(a / "summary.json") == cli::read_file(b / "summary.json"));

    const json manifest = json::parse(cli::read_file(a / "manifest.json"));
    CHECK(manifest["seeds"] == json::array({8}));
    CHECK(io::config_from_json(manifest["config"]) == short_config(300, 8));
    CHECK(manifest["outputs"]["trace"] == "trace.csv");
  }

  SECTION("unwritable output directory fails with a message") {
    const fs::path blocker = scratch("blocker");
    cli::write_file(blocker, "not a directory");
    std::ostringstream err;
    CHECK(cli::cmd_run(short_config(5), blocker / "sub", err) != 0);
    CHECK_FALSE(err.str().empty());
  }
}

TEST_CASE("cmd_analyze reproduces the run summary") {
  const fs::path out = scratch("analyze");
  const auto config = short_config(1500, 3);
  REQUIRE(cli::cmd_run(config, out / "run") == 0);
  const auto recorded = cli::manifest_config_near(out / "run" / "trace.csv");
  REQUIRE(recorded);
  REQUIRE(cli::cmd_analyze(out / "run" / "trace.csv", *recorded, out / "analysis") == 0);
  CHECK(cli::read_file(out / "run" / "summary.json") == cli::read_file(out / "analysis" / "summary.json"));
  CHECK(line_count(out / "analysis" / "phases.csv") == 1 + 1500 * 10);

  SECTION("hand-built rigid rotation has zero drift") {
    const fs::path dir = scratch("rigid");
    fs::create_directories(dir);
    std::ostringstream trace;
    trace << io::kTraceHeader << '\n';
    for (int t = 0; t < 40; ++t) {
      for (int node = 0; node < 2; ++node) {
        const double phase = wrap_phase(node * 2.0 + t * kPi / 4).radians();
        trace << t << ',' << node << ',' << io::format_double(phase) << ",0,0,0,-1,0\n";
      }
    }
    cli::write_file(dir / "trace.csv", trace.str());
    const auto s = cli::analyze_to_directory(dir / "trace.csv", SimConfig{}, dir / "out");
    REQUIRE(s.lock.max_drift);
    CHECK(*s.lock.max_drift < 1e-12);
  }

  SECTION("schema mismatch is reported") {
    const fs::path dir = scratch("badtrace");
    fs::create_directories(dir);
    cli::write_file(dir / "trace.csv", "t,node,phase,chan,collided,success,reward,gated\n");
    std::ostringstream err;
    CHECK(cli::cmd_analyze(dir / "trace.csv", SimConfig{}, dir / "out", err) != 0);
    CHECK(err.str().find("channel") != std::string::npos);
  }
}

TEST_CASE("cmd_sweep") {
  SECTION("1x1 grid matches cmd_run") {
    const fs::path out = scratch("sweep1");
    const auto base = short_config(1200, 6);
    REQUIRE(cli::cmd_sweep(base, {}, {6}, out / "sweep", 2) == 0);
    REQUIRE(cli::cmd_run(base, out / "run") == 0);
    CHECK(cli::read_file(out / "sweep" / "run_0000" / "trace.csv") == cli::read_file(out / "run" / "trace.csv"));
    CHECK(cli::read_file(out / "sweep" / "run_0000" / "summary.json") ==
          cli::read_file(out / "run" / "summary.json"));
    const auto rows = read_csv(out / "sweep" / "sweep.csv");
    REQUIRE(rows.size() == 2);
    CHECK(rows[0] ==
          std::vector<std::string>{"run", "seed", "mean_success_per_step", "group_count", "min_gap", "lock_drift",
                                   "status"});
    const json summary = json::parse(cli::read_file(out / "run" / "summary.json"));
    CHECK(std::stod(rows[1][2]) == summary["throughput"]["mean_success_per_step"].get<double>());
    CHECK(rows[1].back() == "ok");
  }

  SECTION("zero coupling shows rigid independent rotation") {
    const fs::path out = scratch("sweepK");
    const std::vector<cli::GridAxis> grid{cli::parse_grid_axis("coupling=[0, 0.5]")};
    REQUIRE(cli::cmd_sweep(short_config(3000), grid, {1, 2}, out, 3) == 0);
    const auto rows = read_csv(out / "sweep.csv");
    REQUIRE(rows.size() == 5);
    CHECK(rows[0][2] == "coupling");
    for (std::size_t r = 1; r < rows.size(); ++r) {
      const double drift = std::stod(rows[r][6]);
      if (rows[r][2] == "0") {
        CHECK(drift < 1e-12);
      } else {
        CHECK(drift >= 0.0);
      }
    }
  }

  SECTION("more nodes stay under the capacity bound") {
    // Throughput is not monotone in M under the default coupling: attraction
    // between different-channel neighbours packs crowded circles into
    // colliding clumps. Only the bound is asserted here.
    const fs::path out = scratch("sweepM");
    const std::vector<cli::GridAxis> grid{cli::parse_grid_axis("node_count=[10, 20, 40]")};
    REQUIRE(cli::cmd_sweep(short_config(3000), grid, {1, 2, 3}, out, 4) == 0);
    const auto rows = read_csv(out / "sweep.csv");
    REQUIRE(rows.size() == 10);
    std::map<std::string, double> mean_by_m;
    for (std::size_t r = 1; r < rows.size(); ++r) mean_by_m[rows[r][2]] += std::stod(rows[r][3]) / 3.0;
    REQUIRE(mean_by_m.size() == 3);
    for (const auto& [m, mean] : mean_by_m) {
      CHECK(mean > 0.0);
      CHECK(mean <= 12.0);
    }
  }

  SECTION("failed runs are recorded and reported") {
    const fs::path out = scratch("sweepbad");
    const std::vector<cli::GridAxis> grid{cli::parse_grid_axis("channel_count=[5, 3]")};
    std::ostringstream err;
    CHECK(cli::cmd_sweep(short_config(50), grid, {1}, out, 1, err) != 0);
    const auto rows = read_csv(out / "sweep.csv");
    REQUIRE(rows.size() == 3);
    CHECK(rows[1].back() == "ok");
    CHECK(cli::read_file(out / "sweep.csv").find("error: channel_probs") != std::string::npos);
  }
}
