#pragma once

#include <cstdint>
#include <random>

namespace qst {

/// Seedable generator with a platform-independent double conversion, so
/// ensembles are bit-identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed), seed_(seed) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  bool bernoulli(double p) { return uniform() < p; }
  /// Standard normal via Box-Muller.
  double normal();

 private:
  std::mt19937_64 engine_;
  std::uint64_t seed_;
};

/// Per-realization seed: splitmix64 of (seed XOR golden-ratio * (index+1)).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace qst
