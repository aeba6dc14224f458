#pragma once

#include <cstdint>
#include <concepts>
#include <random>

namespace towsync {

// Purpose-named substreams derived from one master seed.
enum class Stream : std::uint64_t { initialization = 1, noise = 2, bernoulli = 3, tie_break = 4 };

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

using Engine = std::mt19937_64;

inline Engine substream(std::uint64_t seed, Stream stream, std::uint64_t node = 0) {
  std::uint64_t key = splitmix64(seed);
  key = splitmix64(key ^ static_cast<std::uint64_t>(stream));
  key = splitmix64(key ^ node);
  return Engine(key);
}

// Uniform in [0, 1) with 53 random bits.
template <std::uniform_random_bit_generator E>
double uniform01(E& engine) {
  return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

}  // namespace towsync
