#pragma once

// Scenario files: the JSON exchange format for verification tasks, plus the
// synthetic scenario generator and the exhaustive grid oracle used to
// cross-check verdicts on small instances.

#include <cstdint>
#include <optional>
#include <string>

#include <fairver/baseline.hpp>
#include <fairver/verifiers.hpp>

namespace fairver {

// A parsed scenario: the task itself plus the solver knobs a file may pin.
struct Scenario {
  VerificationTask task;
  RbfConfig rbf;
  bool has_rbf_overrides = false;  // emit the rbf section only when present
};

// Strict parse: schema errors, partition gaps, and sign violations each
// surface as their own error code with the offending field named.
Scenario parse_scenario(const std::string& text);

// Canonical pretty-printed JSON; parse(emit(s)) reproduces s exactly, and
// emit(parse(t)) is a fixed point for any valid t.
std::string emit_scenario(const Scenario& scenario);

enum class ScenarioFamily { Linear, Poly, Rbf };
enum class BiasPlan { Planted, Masked };

// Synthetic model over one protected boolean (feature 0, unlimited threshold)
// and n-1 pinned continuous features. Planted wires the protected attribute
// into the decision strongly enough that a flip provably exists in-domain;
// Masked removes that dependence so the certified verdict is clean.
Scenario generate_scenario(ScenarioFamily family, int n, std::uint64_t seed, BiasPlan plan);

struct OracleResult {
  double min_gap = 0.0;  // over valid close pairs of grid points
  Vec x, x_prime;        // pair attaining it
  bool bias_found = false;
  std::optional<BiasInstance> instance;
  long pairs_checked = 0;
};

// Exhaustive enumeration over discrete values and an evenly spaced grid of
// grid_density points per continuous feature, walking only per-feature close
// value pairs. Throws SizeExceeded past 10^7 pairs.
OracleResult brute_force_oracle(const VerificationTask& task, int grid_density);

}  // namespace fairver
