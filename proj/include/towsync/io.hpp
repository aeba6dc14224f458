#pragma once

#include <charconv>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "towsync/analysis.hpp"
#include "towsync/config.hpp"
#include "towsync/engine.hpp"
#include "towsync/error.hpp"

namespace towsync::io {

using nlohmann::json;

inline constexpr std::string_view kTraceHeader = "t,node,phase,channel,collided,success,reward,gated";
inline constexpr std::string_view kPhasesHeader = "t,node,phase_deg";

// Shortest decimal form that reads back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw Error("cannot format number");
  return std::string(buf, end);
}

// ---- config ---------------------------------------------------------------

inline std::string_view to_string(OmegaPolicy::Mode mode) {
  switch (mode) {
    case OmegaPolicy::Mode::fixed:
      return "fixed";
    case OmegaPolicy::Mode::oracle:
      return "oracle";
    case OmegaPolicy::Mode::online:
      return "online";
  }
  return "online";
}

inline json config_to_json(const SimConfig& c) {
  json j;
  j["node_count"] = c.node_count;
  j["channel_count"] = c.channel_count;
  j["phase_increment"] = c.phase_increment;
  j["influence_radius"] = c.influence_radius;
  j["coupling"] = c.coupling;
  j["memory_alpha"] = c.memory_alpha;
  j["noise_amplitude"] = c.noise_amplitude;
  j["channel_probs"] = c.channel_probs;
  j["omega_mode"] = std::string(to_string(c.omega_policy.mode));
  j["omega_fixed_value"] = c.omega_policy.fixed_value;
  j["omega_group_size_hint"] =
      c.omega_policy.group_size_hint ? json(*c.omega_policy.group_size_hint) : json(nullptr);
  j["steps"] = c.steps;
  j["seed"] = c.seed;
  j["initial_phases"] = c.initial_phases ? json(*c.initial_phases) : json("uniform-random");
  return j;
}

namespace detail {

inline double as_real(const std::string& key, const json& v) {
  if (!v.is_number()) throw ConfigError(key, "expected a number");
  return v.get<double>();
}

inline std::uint64_t as_count(const std::string& key, const json& v) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
  throw ConfigError(key, "expected a non-negative integer");
}

inline std::vector<double> as_reals(const std::string& key, const json& v) {
  if (!v.is_array()) throw ConfigError(key, "expected an array of numbers");
  std::vector<double> out;
  for (const auto& e : v) out.push_back(as_real(key, e));
  return out;
}

}  // namespace detail

// Sets one flat key on `config`. Unknown keys and ill-typed values throw
// ConfigError naming the key.
inline void apply_setting(SimConfig& config, const std::string& key, const json& v) {
  using detail::as_count;
  using detail::as_real;
  if (key == "node_count") {
    config.node_count = as_count(key, v);
  } else if (key == "channel_count") {
    config.channel_count = as_count(key, v);
  } else if (key == "phase_increment") {
    config.phase_increment = as_real(key, v);
  } else if (key == "influence_radius") {
    config.influence_radius = as_real(key, v);
  } else if (key == "coupling") {
    config.coupling = as_real(key, v);
  } else if (key == "memory_alpha") {
    config.memory_alpha = as_real(key, v);
  } else if (key == "noise_amplitude") {
    config.noise_amplitude = as_real(key, v);
  } else if (key == "channel_probs") {
    config.channel_probs = detail::as_reals(key, v);
  } else if (key == "omega_mode") {
    const std::string mode = v.is_string() ? v.get<std::string>() : "";
    if (mode == "fixed") {
      config.omega_policy.mode = OmegaPolicy::Mode::fixed;
    } else if (mode == "oracle") {
      config.omega_policy.mode = OmegaPolicy::Mode::oracle;
    } else if (mode == "online") {
      config.omega_policy.mode = OmegaPolicy::Mode::online;
    } else {
      throw ConfigError(key, "expected one of fixed, oracle, online");
    }
  } else if (key == "omega_fixed_value") {
    config.omega_policy.fixed_value = as_real(key, v);
  } else if (key == "omega_group_size_hint") {
    if (v.is_null()) {
      config.omega_policy.group_size_hint.reset();
    } else {
      config.omega_policy.group_size_hint = as_count(key, v);
    }
  } else if (key == "steps") {
    config.steps = as_count(key, v);
  } else if (key == "seed") {
    config.seed = as_count(key, v);
  } else if (key == "initial_phases") {
    if (v.is_string() && v.get<std::string>() == "uniform-random") {
      config.initial_phases.reset();
    } else {
      config.initial_phases = detail::as_reals(key, v);
    }
  } else {
    throw ConfigError(key, "unknown configuration key");
  }
}

// Unspecified keys keep their defaults.
inline SimConfig config_from_json(const json& doc, SimConfig base = {}) {
  if (!doc.is_object()) throw ConfigError("", "configuration must be a JSON object");
  for (const auto& [key, value] : doc.items()) apply_setting(base, key, value);
  return base;
}

inline json parse_json_text(std::string_view text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(what, std::string("parse error: ") + e.what());
  }
}

// An empty document means "all defaults".
inline SimConfig parse_config_text(std::string_view text, SimConfig base = {}) {
  if (text.find_first_not_of(" \t\r\n") == std::string_view::npos) return base;
  return config_from_json(parse_json_text(text, "config"), std::move(base));
}

// "KEY=VALUE"; VALUE is read as JSON, falling back to a bare string.
inline std::pair<std::string, json> parse_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError(assignment, "override must look like KEY=VALUE");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json v = json::parse(text, nullptr, false);
  if (v.is_discarded()) v = text;
  return {key, v};
}

// ---- trace CSV ------------------------------------------------------------

inline void write_trace_header(std::ostream& os) { os << kTraceHeader << '\n'; }

inline void write_trace_row(std::ostream& os, const StepRecord& r) {
  os << r.t << ',' << r.node << ',' << format_double(r.phase) << ',' << r.channel << ',' << (r.collided ? 1 : 0)
     << ',' << (r.success ? 1 : 0) << ',' << format_double(r.reward) << ',' << (r.gated ? 1 : 0) << '\n';
}

class CsvTraceSink : public TraceSink {
 public:
  explicit CsvTraceSink(std::ostream& os) : os_(os) { write_trace_header(os_); }

  void consume(std::span<const StepRecord> records) override {
    for (const auto& r : records) write_trace_row(os_, r);
    if (!os_) throw Error("write failed");
  }

 private:
  std::ostream& os_;
};

namespace detail {

template <class T>
T parse_field(std::string_view text, std::string_view column, std::size_t line) {
  T value{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size())
    throw ConfigError(std::string(column), "line " + std::to_string(line) + ": cannot parse '" + std::string(text) + "'");
  return value;
}

inline bool parse_flag(std::string_view text, std::string_view column, std::size_t line) {
  if (text == "0") return false;
  if (text == "1") return true;
  throw ConfigError(std::string(column), "line " + std::to_string(line) + ": expected 0 or 1");
}

inline std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace detail

// Reads a trace in the trace.csv schema. A header mismatch names the first
// offending column.
inline std::vector<StepRecord> read_trace(std::istream& is) {
  static constexpr std::string_view kColumns[] = {"t",       "node",   "phase", "channel",
                                                  "collided", "success", "reward", "gated"};
  std::string line;
  if (!std::getline(is, line)) throw ConfigError("header", "trace is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = detail::split(line);
  for (std::size_t c = 0; c < std::size(kColumns); ++c) {
    if (c >= header.size()) throw ConfigError(std::string(kColumns[c]), "missing column in trace header");
    if (header[c] != kColumns[c])
      throw ConfigError(std::string(kColumns[c]), "unexpected trace column '" + std::string(header[c]) + "'");
  }
  if (header.size() > std::size(kColumns))
    throw ConfigError(std::string(header[std::size(kColumns)]), "unexpected extra trace column");

  std::vector<StepRecord> out;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = detail::split(line);
    if (f.size() != std::size(kColumns))
      throw ConfigError("row", "line " + std::to_string(lineno) + ": expected 8 fields");
    StepRecord r;
    r.t = detail::parse_field<std::uint64_t>(f[0], kColumns[0], lineno);
    r.node = detail::parse_field<std::size_t>(f[1], kColumns[1], lineno);
    r.phase = detail::parse_field<double>(f[2], kColumns[2], lineno);
    r.channel = detail::parse_field<std::size_t>(f[3], kColumns[3], lineno);
    r.collided = detail::parse_flag(f[4], kColumns[4], lineno);
    r.success = detail::parse_flag(f[5], kColumns[5], lineno);
    r.reward = detail::parse_field<double>(f[6], kColumns[6], lineno);
    r.gated = detail::parse_flag(f[7], kColumns[7], lineno);
    out.push_back(r);
  }
  return out;
}

// Node phases in degrees, one row per record.
inline void write_phases(std::ostream& os, std::span<const StepRecord> trace) {
  os << kPhasesHeader << '\n';
  for (const auto& r : trace) os << r.t << ',' << r.node << ',' << format_double(r.phase * (180.0 / kPi)) << '\n';
}

// ---- summary --------------------------------------------------------------

inline json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

inline json summary_to_json(const RunSummary& s, const SimConfig& config) {
  json j;
  j["seed"] = config.seed;
  j["config"] = config_to_json(config);
  j["throughput"] = {
      {"mean_success_per_step", s.throughput.mean_success_per_step},
      {"collision_rate", s.throughput.collision_rate},
      {"per_channel_success_counts", s.throughput.per_channel_success_counts},
      {"capacity_bound", s.throughput.capacity_bound},
      {"steps", s.throughput.steps},
      {"records", s.throughput.records},
  };
  j["groups"] = {
      {"report_step", s.report_step},
      {"group_count", s.groups.group_count()},
      {"groups", s.groups.groups},
      {"group_centers", s.groups.group_centers},
      {"min_intergroup_gap", optional_number(s.groups.min_intergroup_gap)},
      {"channels_per_group", s.groups.channels_per_group},
  };
  j["conclusions"] = {
      {"required_group_count", required_group_count(config.node_count, config.channel_count)},
      {"enough_groups", s.conclusions.enough_groups},
      {"gaps_exceed_radius", s.conclusions.gaps_exceed_radius},
  };
  j["lock"] = {
      {"window", s.lock.window},
      {"max_drift", optional_number(s.lock.max_drift)},
      {"intergroup_min_drift", optional_number(s.lock.intergroup_min_drift)},
      {"intergroup_pair",
       s.lock.intergroup_pair ? json::array({s.lock.intergroup_pair->first, s.lock.intergroup_pair->second})
                              : json(nullptr)},
  };
  return j;
}

}  // namespace towsync::io
