#pragma once

#include <cstddef>
#include <cstdint>
#include <exception>
#include <span>
#include <string>
#include <vector>

#include "towsync/channel.hpp"
#include "towsync/config.hpp"
#include "towsync/phase.hpp"
#include "towsync/rng.hpp"
#include "towsync/tow_bandit.hpp"

namespace towsync {

// One node's observation at one step. `phase` is the phase before the update.
struct StepRecord {
  std::uint64_t t = 0;
  std::size_t node = 0;
  double phase = 0.0;
  std::size_t channel = 0;
  bool collided = false;
  bool success = false;
  double reward = 0.0;
  bool gated = false;

  friend bool operator==(const StepRecord&, const StepRecord&) = default;
};

struct NodeStreams {
  Engine noise;
  Engine bernoulli;
  Engine tie_break;

  static NodeStreams derive(std::uint64_t seed, std::uint64_t node) {
    return {substream(seed, Stream::noise, node), substream(seed, Stream::bernoulli, node),
            substream(seed, Stream::tie_break, node)};
  }
};

struct WorldState {
  std::uint64_t time = 0;
  std::vector<Phase> phases;
  std::vector<BanditState> bandits;
  std::vector<NodeStreams> streams;

  std::size_t node_count() const { return phases.size(); }
};

// Every random number one step consumes, per node.
struct StepDraws {
  std::vector<std::vector<double>> noise;  // [node][channel], in [-Amp, Amp)
  std::vector<double> tie_break;           // [node], in [0, 1)
  std::vector<double> bernoulli;           // [node], in [0, 1)
};

inline WorldState init_world(const SimConfig& config) {
  config.validate();
  WorldState world;
  world.phases.reserve(config.node_count);
  if (config.initial_phases) {
    for (double p : *config.initial_phases) world.phases.push_back(Phase::wrap(p));
  } else {
    Engine init = substream(config.seed, Stream::initialization);
    for (std::size_t i = 0; i < config.node_count; ++i) world.phases.push_back(Phase::from_turns(init()));
  }
  world.bandits.assign(config.node_count, BanditState::zeros(config.channel_count));
  for (std::size_t i = 0; i < config.node_count; ++i) world.streams.push_back(NodeStreams::derive(config.seed, i));
  return world;
}

// Consumes one step's draws from each node's streams, channel order within node.
inline StepDraws draw_step(WorldState& world, const SimConfig& config) {
  const std::size_t m = world.node_count();
  StepDraws d;
  d.noise.assign(m, std::vector<double>(config.channel_count));
  d.tie_break.resize(m);
  d.bernoulli.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    auto& s = world.streams[i];
    for (double& xi : d.noise[i]) xi = config.noise_amplitude * (2.0 * uniform01(s.noise) - 1.0);
    d.tie_break[i] = uniform01(s.tie_break);
    d.bernoulli[i] = uniform01(s.bernoulli);
  }
  return d;
}

/**
 * Advances `world` by one step using the supplied draws.
 *
 * Order: select (displacements + argmax), transmit (collisions + Bernoulli),
 * reward and memory update, then a synchronous phase update in which every
 * force is evaluated against the pre-step phases and this step's selections.
 * Only gated nodes feel the coupling term.
 */
inline std::vector<StepRecord> apply_step(WorldState& world, const SimConfig& config, const StepDraws& draws) {
  const std::size_t m = world.node_count();

  std::vector<std::size_t> selections(m);
  for (std::size_t i = 0; i < m; ++i) {
    const auto x = displacements(world.bandits[i].q_values, draws.noise[i]);
    selections[i] = select_channel(x, draws.tie_break[i]);
  }

  const ChannelSet channels{config.channel_probs};
  const auto collided = find_collisions(world.phases, selections, config.influence_radius);
  const auto outcomes = draw_outcomes(selections, collided, channels, draws.bernoulli);

  std::vector<double> rewards(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double omega = omega_for(config.omega_policy, config.channel_probs, world.bandits[i]);
    rewards[i] = reward_value(outcomes[i].success, omega);
    world.bandits[i] = memory_update(std::move(world.bandits[i]), selections[i], rewards[i], outcomes[i].success,
                                     config.memory_alpha);
  }

  const std::vector<Phase> before = world.phases;
  const Phase increment = Phase::wrap(config.phase_increment);
  std::vector<StepRecord> records(m);
  for (std::size_t i = 0; i < m; ++i) {
    const bool gated = at_interaction_gate(before[i], config.phase_increment);
    double coupling_sum = 0.0;
    if (gated) {
      for (std::size_t j : neighbors_within(i, before, config.influence_radius)) {
        coupling_sum += interaction_force(before[i], before[j], selections[j] == selections[i], config.coupling);
      }
    }
    world.phases[i] = before[i] + increment + Phase::wrap(coupling_sum);
    records[i] = StepRecord{world.time,         i,           before[i].radians(), selections[i],
                            outcomes[i].collided, outcomes[i].success, rewards[i],          gated};
  }
  ++world.time;
  return records;
}

inline std::vector<StepRecord> step(WorldState& world, const SimConfig& config) {
  const StepDraws draws = draw_step(world, config);
  return apply_step(world, config, draws);
}

// Receives each step's M records, in step order.
class TraceSink {
 public:
  virtual ~TraceSink() = default;
  virtual void consume(std::span<const StepRecord> records) = 0;
};

class MemorySink : public TraceSink {
 public:
  void consume(std::span<const StepRecord> records) override {
    records_.insert(records_.end(), records.begin(), records.end());
  }
  const std::vector<StepRecord>& records() const { return records_; }

 private:
  std::vector<StepRecord> records_;
};

inline WorldState run(const SimConfig& config, std::span<TraceSink* const> sinks) {
  WorldState world = init_world(config);
  for (std::uint64_t n = 0; n < config.steps; ++n) {
    const auto records = step(world, config);
    for (TraceSink* sink : sinks) {
      try {
        sink->consume(records);
      } catch (const std::exception& e) {
        throw Error("trace sink failed at step " + std::to_string(records.front().t) + ": " + e.what());
      }
    }
  }
  return world;
}

inline WorldState run(const SimConfig& config) { return run(config, std::span<TraceSink* const>{}); }

}  // namespace towsync
