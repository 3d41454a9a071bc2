#pragma once

// Deterministic random sources. All randomness in the library flows through
// std::mt19937_64 seeded from a run seed; per-trial seeds are derived with
// splitmix64 so serial and parallel runs draw identical streams.

#include <cstdint>
#include <random>
#include <vector>

#include "lis/core.hpp"

namespace lis {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t trial_seed(std::uint64_t run_seed, std::uint64_t trial) {
  return splitmix64(splitmix64(run_seed) ^ trial);
}

// Uniform on [0, 1) from the top 53 bits; independent of the standard
// library's distribution implementations.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  return static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)) % n;
}

inline Observable random_observable(const Alphabet& alphabet, const Window& support, Rng& rng,
                                    const EnumerationCap& cap = {}) {
  cap.check(alphabet.size(), support.length());
  std::vector<double> table(power_count(alphabet.size(), support.length()));
  for (double& v : table) v = uniform01(rng);
  return Observable(alphabet, support, std::move(table));
}

inline PastConfig random_past(const Alphabet& alphabet, std::size_t length, Rng& rng) {
  PastConfig p;
  p.symbols.resize(length);
  for (auto& s : p.symbols) s = static_cast<Symbol>(uniform_index(rng, alphabet.size()));
  return p;
}

}  // namespace lis
