#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "towsync/error.hpp"
#include "towsync/rng.hpp"

namespace towsync {

// Per-node tug-of-war learner state.
struct BanditState {
  std::vector<double> q_values;
  std::optional<std::size_t> last_selection;
  std::vector<std::uint64_t> play_counts;
  std::vector<std::uint64_t> success_counts;

  static BanditState zeros(std::size_t channels) {
    return BanditState{std::vector<double>(channels, 0.0), std::nullopt, std::vector<std::uint64_t>(channels, 0),
                       std::vector<std::uint64_t>(channels, 0)};
  }

  std::size_t channel_count() const { return q_values.size(); }

  friend bool operator==(const BanditState&, const BanditState&) = default;
};

struct OmegaPolicy {
  enum class Mode { fixed, oracle, online };

  Mode mode = Mode::online;
  double fixed_value = 0.0;
  // N' for the group-adaptive gamma = P[N'] + P[N'+1].
  std::optional<std::size_t> group_size_hint;

  void validate(std::size_t channels) const {
    if (mode == Mode::fixed && !(fixed_value >= 0.0 && std::isfinite(fixed_value)))
      throw ConfigError("omega_fixed_value", "must be finite and >= 0");
    if (group_size_hint && (*group_size_hint < 1 || *group_size_hint + 1 > channels))
      throw ConfigError("omega_group_size_hint", "must satisfy 1 <= N' <= N-1");
  }

  friend bool operator==(const OmegaPolicy&, const OmegaPolicy&) = default;
};

/**
 * Tug-of-war displacements
 *
 *   X_k = Q_k - (1/(N-1)) * sum_{l != k} Q_l + xi_k
 *
 * The sum is evaluated directly in ascending l, not via a running total, so
 * that the result does not depend on cancellation in a global sum.
 */
inline std::vector<double> displacements(std::span<const double> q_values, std::span<const double> noise) {
  const std::size_t n = q_values.size();
  if (n < 2) throw ConfigError("channel_count", "tug-of-war needs at least 2 channels");
  if (noise.size() != n) throw ConfigError("noise", "length must equal channel count");
  std::vector<double> x(n);
  const double inv = 1.0 / static_cast<double>(n - 1);
  for (std::size_t k = 0; k < n; ++k) {
    double others = 0.0;
    for (std::size_t l = 0; l < n; ++l) {
      if (l != k) others += q_values[l];
    }
    x[k] = q_values[k] - inv * others + noise[k];
  }
  return x;
}

// Argmax with ties resolved by `tie_draw` in [0, 1): the floor(tie_draw * m)-th
// of the m maximizers in index order.
inline std::size_t select_channel(std::span<const double> x_values, double tie_draw) {
  if (x_values.empty()) throw ConfigError("x_values", "cannot select from an empty set");
  const double best = *std::max_element(x_values.begin(), x_values.end());
  std::size_t ties = 0;
  for (double x : x_values) ties += (x == best);
  auto pick = static_cast<std::size_t>(tie_draw * static_cast<double>(ties));
  pick = std::min(pick, ties - 1);
  for (std::size_t k = 0; k < x_values.size(); ++k) {
    if (x_values[k] == best && pick-- == 0) return k;
  }
  return 0;  // unreachable
}

template <std::uniform_random_bit_generator Engine>
std::size_t select_channel(std::span<const double> x_values, Engine& engine) {
  return select_channel(x_values, uniform01(engine));
}

inline double reward_value(bool success, double omega) { return success ? 1.0 : -omega; }

/**
 * Q_k <- R_k + alpha * Q_k for every channel. Only the played channel receives
 * a reward; the others decay. Play and success counters advance for `selected`.
 */
[[nodiscard]] inline BanditState memory_update(BanditState state, std::size_t selected, double reward, bool success,
                                               double alpha) {
  if (selected >= state.channel_count()) throw ConfigError("selected", "channel index out of range");
  for (std::size_t k = 0; k < state.channel_count(); ++k) {
    const double r = k == selected ? reward : 0.0;
    state.q_values[k] = r + alpha * state.q_values[k];
  }
  state.last_selection = selected;
  ++state.play_counts[selected];
  if (success) ++state.success_counts[selected];
  return state;
}

// gamma / (2 - gamma) from the top-ranked probabilities (sorted descending):
// P[1] + P[2], or P[N'] + P[N'+1] with a hint.
inline double omega_from_ranked(std::vector<double> probs, std::optional<std::size_t> hint) {
  if (probs.size() < 2) throw ConfigError("channel_count", "omega needs at least 2 channels");
  const std::size_t first = hint.value_or(1);
  if (first < 1 || first + 1 > probs.size()) throw ConfigError("omega_group_size_hint", "must satisfy 1 <= N' <= N-1");
  std::sort(probs.begin(), probs.end(), std::greater<>());
  const double gamma = probs[first - 1] + probs[first];
  return gamma / (2.0 - gamma);
}

inline double omega_oracle(std::span<const double> channel_probs, std::optional<std::size_t> hint = std::nullopt) {
  for (double p : channel_probs) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("channel_probs", "probabilities must lie in [0, 1]");
  }
  return omega_from_ranked({channel_probs.begin(), channel_probs.end()}, hint);
}

// Same formula with smoothed estimates (successes + 1) / (plays + 2).
inline double omega_online(const BanditState& state, std::optional<std::size_t> hint = std::nullopt) {
  std::vector<double> est(state.channel_count());
  for (std::size_t k = 0; k < est.size(); ++k) {
    est[k] = (static_cast<double>(state.success_counts[k]) + 1.0) / (static_cast<double>(state.play_counts[k]) + 2.0);
  }
  return omega_from_ranked(std::move(est), hint);
}

inline double omega_for(const OmegaPolicy& policy, std::span<const double> channel_probs, const BanditState& state) {
  switch (policy.mode) {
    case OmegaPolicy::Mode::fixed:
      return policy.fixed_value;
    case OmegaPolicy::Mode::oracle:
      return omega_oracle(channel_probs, policy.group_size_hint);
    case OmegaPolicy::Mode::online:
      return omega_online(state, policy.group_size_hint);
  }
  return 0.0;
}

}  // namespace towsync
