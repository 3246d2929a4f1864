#pragma once

// Random testing baseline: draw valid point pairs at random, keep the first
// one that witnesses a bias instance. No certificates, no bounds; a cheap
// reference the verification engine is compared against.

#include <cstdint>
#include <optional>

#include <fairver/verifiers.hpp>

namespace fairver {

// How a close partner is generated for a sampled point.
// UniformPairs draws a second independent point and lets the closeness test
// filter; ProtectedFlip copies the point and resamples only the coordinates
// in unlimited-threshold blocks, so every pair is close by construction.
enum class PerturbationStrategy { UniformPairs, ProtectedFlip };

struct RandomTestConfig {
  long sample_budget = 50000;
  std::uint64_t seed = 0;
  PerturbationStrategy strategy = PerturbationStrategy::ProtectedFlip;
  int workers = 1;

  void validate() const;  // budget and workers at least 1
};

struct RandomTestOutcome {
  bool found = false;
  std::optional<BiasInstance> instance;  // set iff found
  long samples_used = 0;
  double elapsed_seconds = 0.0;

  const char* kind_name() const { return found ? "FoundBias" : "NotFound"; }
};

// Deterministic for a fixed (seed, strategy, budget, workers) tuple: shard i
// draws from a seed derived by Rng::shard_seed and covers a contiguous slice
// of the budget, and shards are merged by index, so thread timing never leaks
// into the outcome.
RandomTestOutcome random_test(const VerificationTask& task, const RandomTestConfig& config);

}  // namespace fairver
