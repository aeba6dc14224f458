#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

#include "towsync/error.hpp"

namespace towsync {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/**
 * A point on the phase circle.
 *
 * Stored as an unsigned 64-bit fraction of a full turn so that wraparound is
 * exact integer overflow: advancing by Omega = pi/4 eight times returns to the
 * starting point bit for bit, and phase differences are exact. radians() is
 * always in [0, 2*pi).
 */
class Phase {
 public:
  constexpr Phase() = default;

  static constexpr Phase from_turns(std::uint64_t turns) { return Phase(turns); }

  // Reduces `raw` radians modulo 2*pi. Throws StateError on NaN/inf.
  static Phase wrap(double raw) {
    if (!std::isfinite(raw)) throw StateError("non-finite phase value");
    double t = raw / kTwoPi;
    t -= std::floor(t);
    double scaled = t * kTurnsPerCircle;
    // Prefer the neighbouring turn count that maps back onto `raw` exactly, so
    // that wrap(p.radians()).radians() == p.radians().
    if (raw >= 0.0 && raw < kTwoPi) {
      for (double cand : {scaled, std::nextafter(scaled, 0.0), std::nextafter(scaled, kTurnsPerCircle)}) {
        if (cand < kTurnsPerCircle && cand == std::floor(cand) && to_radians(cand) == raw) return Phase(static_cast<std::uint64_t>(cand));
      }
    }
    scaled = std::round(scaled);
    if (scaled >= kTurnsPerCircle) return Phase(0);
    return Phase(static_cast<std::uint64_t>(scaled));
  }

  constexpr std::uint64_t turns() const { return turns_; }

  double radians() const {
    double r = to_radians(static_cast<double>(turns_));
    return r < kTwoPi ? r : std::nextafter(kTwoPi, 0.0);
  }

  double degrees() const { return radians() * (180.0 / kPi); }

  // Group operation on the circle.
  friend constexpr Phase operator+(Phase a, Phase b) { return Phase(a.turns_ + b.turns_); }
  friend constexpr Phase operator-(Phase a, Phase b) { return Phase(a.turns_ - b.turns_); }
  friend constexpr bool operator==(Phase, Phase) = default;

 private:
  static constexpr double kTurnsPerCircle = 18446744073709551616.0;  // 2^64
  static constexpr double kRadiansPerTurn = kTwoPi / kTurnsPerCircle;

  static double to_radians(double turns) { return turns * kRadiansPerTurn; }

  constexpr explicit Phase(std::uint64_t turns) : turns_(turns) {}

  std::uint64_t turns_ = 0;

  friend double signed_difference(Phase from, Phase to);
  friend double circular_distance(Phase a, Phase b);
};

// `raw` radians reduced into [0, 2*pi).
inline Phase wrap_phase(double raw) { return Phase::wrap(raw); }

// Signed difference to - from, in (-pi, pi].
inline double signed_difference(Phase from, Phase to) {
  const auto d = static_cast<std::int64_t>(to.turns_ - from.turns_);
  if (d == INT64_MIN) return kPi;
  return static_cast<double>(d) * Phase::kRadiansPerTurn;
}

// Shortest arc between a and b, in [0, pi].
inline double circular_distance(Phase a, Phase b) {
  const std::uint64_t d = a.turns_ - b.turns_;
  const std::uint64_t shortest = d < (0 - d) ? d : (0 - d);
  return static_cast<double>(shortest) * Phase::kRadiansPerTurn;
}

struct GeometryParams {
  double phase_increment = kPi / 4;   // Omega
  double influence_radius = kPi / 4;  // phi_th
  double coupling = 0.5;              // K

  void validate() const {
    if (!(phase_increment > 0.0 && phase_increment <= kPi))
      throw ConfigError("phase_increment", "must lie in (0, pi]");
    if (!(influence_radius > 0.0 && influence_radius <= kPi))
      throw ConfigError("influence_radius", "must lie in (0, pi]");
    if (!(coupling >= 0.0) || !std::isfinite(coupling)) throw ConfigError("coupling", "must be finite and >= 0");
  }
};

// Indices j != i strictly closer than `radius` to node i.
inline std::vector<std::size_t> neighbors_within(std::size_t i, std::span<const Phase> phases, double radius) {
  if (i >= phases.size()) throw ConfigError("node", "index out of range");
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < phases.size(); ++j) {
    if (j != i && circular_distance(phases[j], phases[i]) < radius) out.push_back(j);
  }
  return out;
}

/**
 * Coupling exerted on node i by node j.
 *
 * Same channel pushes apart (-K sin), different channels pull together
 * (+K sin). An exactly antipodal pair exerts no force.
 */
inline double interaction_force(Phase theta_i, Phase theta_j, bool same_channel, double coupling) {
  if (theta_j - theta_i == Phase::from_turns(std::uint64_t{1} << 63)) return 0.0;
  const double s = std::sin(signed_difference(theta_i, theta_j));
  return same_channel ? -coupling * s : coupling * s;
}

// True in the sector [0, Omega) containing this revolution's zero crossing.
// Compared in turns so the sector boundary is exact.
inline bool at_interaction_gate(Phase theta, double phase_increment) {
  return theta.turns() < Phase::wrap(phase_increment).turns();
}

}  // namespace towsync
