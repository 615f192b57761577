#pragma once

#include <cstdint>
#include <random>

namespace causaldq {

using Rng = std::mt19937_64;

// Purpose tags for derived seeds. Each consumer of randomness gets its own
// stream so that adding draws in one place never shifts another.
enum class SeedTag : std::uint64_t {
  Dag = 1,
  Weights,
  TrainStreams,
  TrainOnset,
  TrainContext,
  NetInit,
  Explore,
  Replay,
  EvalStreams,
  EvalContext,
  CpeCorruption,
  Theory,
};

std::uint64_t splitmix64(std::uint64_t x);

std::uint64_t derive_seed(std::uint64_t base, SeedTag tag, std::uint64_t index = 0);

inline Rng make_rng(std::uint64_t seed) { return Rng(splitmix64(seed)); }

}  // namespace causaldq
