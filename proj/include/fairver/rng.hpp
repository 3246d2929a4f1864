#pragma once

#include <cstdint>
#include <random>

namespace fairver {

// Deterministic RNG wrapper. Draws are derived from the raw mt19937_64
// stream rather than std distributions, so sequences are reproducible
// across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t bits() { return eng_(); }

  // Uniform real in [lo, hi).
  double real(double lo = 0.0, double hi = 1.0) {
    double u = static_cast<double>(bits() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * u;
  }

  // Uniform integer in [lo, hi], inclusive.
  long integer(long lo, long hi) {
    std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    if (span == 0) return lo + static_cast<long>(bits());  // full range
    std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
    std::uint64_t r;
    do {
      r = bits();
    } while (r >= limit);
    return lo + static_cast<long>(r % span);
  }

  bool coin(double p = 0.5) { return real() < p; }

  // Independent stream for shard k of this generator's seed space.
  static std::uint64_t shard_seed(std::uint64_t seed, std::uint64_t shard) {
    // splitmix64 step over seed ^ golden-ratio multiples of the shard index
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (shard + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace fairver
