#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <numeric>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "towsync/config.hpp"
#include "towsync/engine.hpp"
#include "towsync/error.hpp"
#include "towsync/phase.hpp"

namespace towsync {

struct GroupReport {
  std::vector<std::vector<std::size_t>> groups;  // each sorted; ordered by smallest member
  std::vector<double> group_centers;             // circular mean, radians
  std::optional<double> min_intergroup_gap;      // nullopt with a single group
  std::vector<std::vector<std::size_t>> channels_per_group;  // sorted multiset, empty if unknown

  std::size_t group_count() const { return groups.size(); }
};

inline double circular_mean(std::span<const Phase> phases) {
  double s = 0.0;
  double c = 0.0;
  for (Phase p : phases) {
    s += std::sin(p.radians());
    c += std::cos(p.radians());
  }
  return Phase::wrap(std::atan2(s, c)).radians();
}

/**
 * Single-linkage clustering on the circle: walk the nodes in phase order and
 * cut wherever the forward gap to the next node (including the wraparound
 * gap) is >= threshold.
 */
inline GroupReport detect_groups(std::span<const Phase> phases, double threshold,
                                 std::span<const std::size_t> selections = {}) {
  if (phases.empty()) throw ConfigError("phases", "cannot group an empty phase list");
  if (!(threshold > 0.0)) throw ConfigError("threshold", "must be > 0");
  if (!selections.empty() && selections.size() != phases.size())
    throw ConfigError("selections", "length must equal number of phases");

  const std::size_t m = phases.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return phases[a].turns() < phases[b].turns(); });

  // cut[k]: the gap after order[k] separates groups.
  std::vector<bool> cut(m, false);
  std::optional<double> min_gap;
  std::size_t cuts = 0;
  if (m > 1) {
    for (std::size_t k = 0; k < m; ++k) {
      const double gap = (phases[order[(k + 1) % m]] - phases[order[k]]).radians();
      if (gap >= threshold) {
        cut[k] = true;
        ++cuts;
        min_gap = min_gap ? std::min(*min_gap, gap) : gap;
      }
    }
  }

  GroupReport report;
  if (cuts == 0) {
    report.groups.push_back(order);
  } else {
    const std::size_t first_cut = static_cast<std::size_t>(std::find(cut.begin(), cut.end(), true) - cut.begin());
    std::vector<std::size_t> current;
    for (std::size_t n = 1; n <= m; ++n) {
      const std::size_t k = (first_cut + n) % m;
      current.push_back(order[k]);
      if (cut[k]) {
        report.groups.push_back(std::move(current));
        current.clear();
      }
    }
  }
  for (auto& g : report.groups) std::sort(g.begin(), g.end());
  std::sort(report.groups.begin(), report.groups.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });

  for (const auto& g : report.groups) {
    std::vector<Phase> members;
    for (std::size_t i : g) members.push_back(phases[i]);
    report.group_centers.push_back(circular_mean(members));
    if (!selections.empty()) {
      std::vector<std::size_t> ch;
      for (std::size_t i : g) ch.push_back(selections[i]);
      std::sort(ch.begin(), ch.end());
      report.channels_per_group.push_back(std::move(ch));
    }
  }
  // A single cut leaves one arc: its gap is to itself, not to another group.
  if (report.groups.size() > 1) report.min_intergroup_gap = min_gap;
  return report;
}

struct ConclusionCheck {
  bool enough_groups = false;     // group count >= ceil(M/N)
  bool gaps_exceed_radius = false;  // every inter-group gap > phi_th
};

inline std::size_t required_group_count(std::size_t nodes, std::size_t channels) {
  return (nodes + channels - 1) / channels;
}

inline ConclusionCheck check_conclusions(const GroupReport& report, std::size_t nodes, std::size_t channels,
                                         double influence_radius) {
  return {report.group_count() >= required_group_count(nodes, channels),
          !report.min_intergroup_gap || *report.min_intergroup_gap > influence_radius};
}

struct PairDrift {
  std::size_t i = 0;
  std::size_t j = 0;
  double drift = 0.0;
};

/**
 * For every node pair, the spread (max - min) of the pairwise phase
 * difference over the window. Differences are unwrapped relative to the first
 * sample so a pair sitting near +/-pi does not read as a 2*pi jump.
 * `window[t][i]` is node i's phase at the t-th step of the window.
 */
inline std::vector<PairDrift> pair_drifts(std::span<const std::vector<Phase>> window) {
  if (window.size() < 2) throw ConfigError("window", "lock window needs at least 2 steps");
  const std::size_t m = window.front().size();
  for (const auto& row : window) {
    if (row.size() != m) throw ConfigError("window", "every step must hold the same number of nodes");
  }
  std::vector<PairDrift> out;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      const Phase ref = window.front()[j] - window.front()[i];
      double lo = 0.0;
      double hi = 0.0;
      for (const auto& row : window) {
        const double rel = signed_difference(ref, row[j] - row[i]);
        lo = std::min(lo, rel);
        hi = std::max(hi, rel);
      }
      out.push_back({i, j, hi - lo});
    }
  }
  return out;
}

inline double lock_metric(std::span<const std::vector<Phase>> window) {
  double worst = 0.0;
  for (const auto& p : pair_drifts(window)) worst = std::max(worst, p.drift);
  return worst;
}

// (2*pi / phi_th) * sum_k P_k
inline double capacity_bound(double influence_radius, std::span<const double> channel_probs) {
  if (!(influence_radius > 0.0)) throw ConfigError("influence_radius", "must be > 0");
  double total = 0.0;
  for (double p : channel_probs) total += p;
  return kTwoPi / influence_radius * total;
}

struct ThroughputSummary {
  double mean_success_per_step = 0.0;
  double collision_rate = 0.0;
  std::vector<std::uint64_t> per_channel_success_counts;
  double capacity_bound = 0.0;
  std::uint64_t steps = 0;
  std::uint64_t records = 0;
};

struct LockReport {
  std::size_t window = 0;  // steps actually used
  std::optional<double> max_drift;
  // Best-locked pair whose members sit in different groups at the report step.
  std::optional<double> intergroup_min_drift;
  std::optional<std::pair<std::size_t, std::size_t>> intergroup_pair;
};

struct RunSummary {
  ThroughputSummary throughput;
  std::uint64_t report_step = 0;
  GroupReport groups;
  ConclusionCheck conclusions;
  LockReport lock;
};

inline constexpr std::size_t kDefaultLockWindow = 1000;

/**
 * Streaming analysis of a trace. Feeding the same records, whether live from
 * run() or re-read from a trace file, yields the same summary.
 */
class SummaryAccumulator : public TraceSink {
 public:
  explicit SummaryAccumulator(SimConfig config, std::size_t lock_window = kDefaultLockWindow)
      : config_(std::move(config)), lock_window_(lock_window), per_channel_(config_.channel_count, 0) {}

  void consume(std::span<const StepRecord> records) override {
    if (records.size() != config_.node_count)
      throw ConfigError("node_count", "step carries " + std::to_string(records.size()) + " records, expected " +
                                          std::to_string(config_.node_count));
    std::vector<Phase> phases(records.size());
    std::vector<std::size_t> channels(records.size());
    for (const auto& r : records) {
      if (r.node >= records.size() || r.t != records.front().t) throw ConfigError("trace", "malformed step records");
      if (r.channel >= config_.channel_count) throw ConfigError("channel", "channel index out of range");
      phases[r.node] = Phase::wrap(r.phase);
      channels[r.node] = r.channel;
      successes_ += r.success;
      collisions_ += r.collided;
      if (r.success) ++per_channel_[r.channel];
    }
    records_ += records.size();
    ++steps_;
    last_step_ = records.front().t;
    last_channels_ = channels;
    window_.push_back(std::move(phases));
    if (window_.size() > lock_window_) window_.pop_front();
  }

  ThroughputSummary throughput() const {
    if (steps_ == 0) throw ConfigError("trace", "empty trace");
    ThroughputSummary s;
    s.mean_success_per_step = static_cast<double>(successes_) / static_cast<double>(steps_);
    s.collision_rate = static_cast<double>(collisions_) / static_cast<double>(records_);
    s.per_channel_success_counts = per_channel_;
    s.capacity_bound = capacity_bound(config_.influence_radius, config_.channel_probs);
    s.steps = steps_;
    s.records = records_;
    return s;
  }

  RunSummary summary() const {
    RunSummary out;
    out.throughput = throughput();
    out.report_step = last_step_;
    out.groups = detect_groups(window_.back(), config_.influence_radius, last_channels_);
    out.conclusions =
        check_conclusions(out.groups, config_.node_count, config_.channel_count, config_.influence_radius);
    out.lock.window = window_.size();
    if (window_.size() >= 2) {
      const std::vector<std::vector<Phase>> window(window_.begin(), window_.end());
      std::vector<std::size_t> group_of(config_.node_count);
      for (std::size_t g = 0; g < out.groups.groups.size(); ++g) {
        for (std::size_t i : out.groups.groups[g]) group_of[i] = g;
      }
      double worst = 0.0;
      for (const auto& p : pair_drifts(window)) {
        worst = std::max(worst, p.drift);
        if (group_of[p.i] != group_of[p.j] && (!out.lock.intergroup_min_drift || p.drift < *out.lock.intergroup_min_drift)) {
          out.lock.intergroup_min_drift = p.drift;
          out.lock.intergroup_pair = std::make_pair(p.i, p.j);
        }
      }
      out.lock.max_drift = worst;
    }
    return out;
  }

 private:
  SimConfig config_;
  std::size_t lock_window_;
  std::uint64_t steps_ = 0;
  std::uint64_t records_ = 0;
  std::uint64_t successes_ = 0;
  std::uint64_t collisions_ = 0;
  std::vector<std::uint64_t> per_channel_;
  std::uint64_t last_step_ = 0;
  std::vector<std::size_t> last_channels_;
  std::deque<std::vector<Phase>> window_;
};

// Feeds a flat trace (M records per step, steps in order) through an accumulator.
inline SummaryAccumulator accumulate(std::span<const StepRecord> trace, const SimConfig& config,
                                     std::size_t lock_window = kDefaultLockWindow) {
  if (trace.empty()) throw ConfigError("trace", "empty trace");
  const std::size_t m = config.node_count;
  if (trace.size() % m != 0) throw ConfigError("trace", "record count is not a multiple of node_count");
  SummaryAccumulator acc(config, lock_window);
  for (std::size_t off = 0; off < trace.size(); off += m) acc.consume(trace.subspan(off, m));
  return acc;
}

inline ThroughputSummary throughput_summary(std::span<const StepRecord> trace, const SimConfig& config) {
  return accumulate(trace, config).throughput();
}

}  // namespace towsync
