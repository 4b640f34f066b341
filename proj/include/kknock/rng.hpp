#pragma once

#include <cstdint>
#include <random>

namespace kknock {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Purposes that get their own RNG stream. Values are part of the
/// reproducibility contract: changing them changes every seeded result.
enum class StreamTag : std::uint64_t {
  Knockoff = 1,
  TuneTau = 2,
  TunePilot = 3,
  Replication = 4,
  Refit = 5,
  Predictors = 6,
  Components = 7,
  Response = 8,
  Selector = 9,
  Support = 10,
  AltScores = 11,
};

/// Seed for stream (tag, index) under a master seed. Streams for distinct
/// (tag, index) pairs are statistically independent, so replication ell
/// gets the same stream no matter which thread runs it.
constexpr std::uint64_t derive_seed(std::uint64_t master, StreamTag tag,
                                    std::uint64_t index = 0) {
  return mix64(mix64(mix64(master) ^ static_cast<std::uint64_t>(tag)) ^
               mix64(index ^ 0x5851f42d4c957f2dULL));
}

class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : engine_(mix64(seed)) {}
  RngStream(std::uint64_t master, StreamTag tag, std::uint64_t index = 0)
      : RngStream(derive_seed(master, tag, index)) {}

  // [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal() { return normal_(engine_); }
  std::uint64_t next_u64() { return engine_(); }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace kknock
