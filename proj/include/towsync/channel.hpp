#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include "towsync/error.hpp"
#include "towsync/phase.hpp"
#include "towsync/rng.hpp"

namespace towsync {

class ChannelSet {
 public:
  ChannelSet() = default;
  explicit ChannelSet(std::vector<double> probs) : probs_(std::move(probs)) {
    if (probs_.empty()) throw ConfigError("channel_probs", "at least one channel required");
    for (double p : probs_) {
      if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("channel_probs", "probabilities must lie in [0, 1]");
    }
  }

  std::size_t size() const { return probs_.size(); }
  double operator[](std::size_t k) const { return probs_[k]; }
  std::span<const double> probs() const { return probs_; }

  friend bool operator==(const ChannelSet&, const ChannelSet&) = default;

 private:
  std::vector<double> probs_;
};

struct TransmissionOutcome {
  std::size_t node = 0;
  std::size_t channel = 0;
  bool collided = false;
  bool bernoulli_win = false;
  bool success = false;  // bernoulli_win && !collided
};

// Node i collides iff another node on the same channel is strictly within
// `influence_radius` of it.
inline std::vector<bool> find_collisions(std::span<const Phase> phases, std::span<const std::size_t> selections,
                                         double influence_radius) {
  if (phases.size() != selections.size()) throw ConfigError("selections", "length must equal number of phases");
  const std::size_t m = phases.size();
  std::vector<bool> collided(m, false);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      if (selections[i] == selections[j] && circular_distance(phases[i], phases[j]) < influence_radius) {
        collided[i] = true;
        collided[j] = true;
      }
    }
  }
  return collided;
}

/**
 * One Bernoulli(P_{s_i}) trial per node, `draws[i]` in [0, 1) being node i's
 * uniform variate (win iff draw < P). Collided nodes still consume a draw; the
 * win is masked afterwards.
 */
inline std::vector<TransmissionOutcome> draw_outcomes(std::span<const std::size_t> selections,
                                                      const std::vector<bool>& collided, const ChannelSet& channels,
                                                      std::span<const double> draws) {
  if (collided.size() != selections.size() || draws.size() != selections.size())
    throw ConfigError("selections", "selections, collision flags and draws must have equal length");
  std::vector<TransmissionOutcome> out(selections.size());
  for (std::size_t i = 0; i < selections.size(); ++i) {
    const std::size_t k = selections[i];
    if (k >= channels.size()) throw ConfigError("selections", "channel index out of range");
    const bool win = draws[i] < channels[k];
    out[i] = TransmissionOutcome{i, k, collided[i], win, win && !collided[i]};
  }
  return out;
}

template <std::uniform_random_bit_generator E>
std::vector<TransmissionOutcome> draw_outcomes(std::span<const std::size_t> selections,
                                               const std::vector<bool>& collided, const ChannelSet& channels,
                                               E& engine) {
  std::vector<double> draws(selections.size());
  for (double& d : draws) d = uniform01(engine);
  return draw_outcomes(selections, collided, channels, draws);
}

}  // namespace towsync
