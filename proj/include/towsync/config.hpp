#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "towsync/channel.hpp"
#include "towsync/error.hpp"
#include "towsync/phase.hpp"
#include "towsync/tow_bandit.hpp"

namespace towsync {

// Every run parameter. Defaults are the reference scenario: 10 nodes, 5
// channels with P = 0.1..0.5, Omega = phi_th = pi/4, alpha = 0.95,
// noise amplitude 0.1, K = 0.5, omega estimated online.
struct SimConfig {
  std::size_t node_count = 10;
  std::size_t channel_count = 5;
  double phase_increment = kPi / 4;
  double influence_radius = kPi / 4;
  double coupling = 0.5;
  double memory_alpha = 0.95;
  double noise_amplitude = 0.1;
  std::vector<double> channel_probs{0.1, 0.2, 0.3, 0.4, 0.5};
  OmegaPolicy omega_policy{};
  std::uint64_t steps = 10'000;
  std::uint64_t seed = 1;
  // nullopt draws phases uniformly on [0, 2*pi) from the initialization stream.
  std::optional<std::vector<double>> initial_phases;

  GeometryParams geometry() const { return {phase_increment, influence_radius, coupling}; }

  void validate() const {
    if (node_count < 1) throw ConfigError("node_count", "must be >= 1");
    if (channel_count < 2) throw ConfigError("channel_count", "must be >= 2");
    geometry().validate();
    if (!(memory_alpha >= 0.0 && memory_alpha <= 1.0)) throw ConfigError("memory_alpha", "must lie in [0, 1]");
    if (!(noise_amplitude >= 0.0) || !std::isfinite(noise_amplitude))
      throw ConfigError("noise_amplitude", "must be finite and >= 0");
    if (channel_probs.size() != channel_count)
      throw ConfigError("channel_probs", "expected " + std::to_string(channel_count) + " entries, got " +
                                             std::to_string(channel_probs.size()));
    ChannelSet{channel_probs};
    omega_policy.validate(channel_count);
    if (initial_phases) {
      if (initial_phases->size() != node_count)
        throw ConfigError("initial_phases", "expected " + std::to_string(node_count) + " entries");
      for (double p : *initial_phases) {
        if (!(p >= 0.0 && p < kTwoPi)) throw ConfigError("initial_phases", "each phase must lie in [0, 2*pi)");
      }
    }
  }

  friend bool operator==(const SimConfig&, const SimConfig&) = default;
};

}  // namespace towsync
