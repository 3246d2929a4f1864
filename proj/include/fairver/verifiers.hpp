#pragma once

// Bias verification for linear, polynomial-kernel, and RBF-kernel models.
//
// The driver enumerates assignments to a user-chosen set of discrete
// attributes, dispatches one certified subproblem per assignment pair, and
// folds the results: every lower bound clearing the tolerance proves the
// absence of bias, a validated witness pair proves its presence, and
// anything short of both is reported as inconclusive rather than guessed.

#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <fairver/core_model.hpp>

namespace fairver {

struct VerificationTask {
  ModelSpec model;
  std::vector<FeatureDomain> domains;
  PerturbationSpec spec;
  std::vector<int> fixed_set;  // discrete attributes enumerated exactly
  std::vector<int> relax_set;  // discrete attributes treated as boxes
  TaskMode mode = TaskMode::Regression;

  void validate() const;
};

// Tuning for the RBF path. The search radius around support vector r is
// sqrt(log(M w_r / epsilon) / gamma): outside it the r-th kernel term stays
// below epsilon / M and cannot drive a sign change.
struct RbfConfig {
  double epsilon = 1e-8;
  // Weight envelope 0 < c <= w_i <= C. Zero / infinity mean "take the
  // extreme weights of the model itself".
  double weight_lower = 0.0;
  double weight_upper = std::numeric_limits<double>::infinity();

  void validate() const;
};

struct VerifierConfig {
  RbfConfig rbf;
  // Relaxation levels explored above the admissible minimum degree.
  int hierarchy_extra_levels = 2;
  // Absolute ceiling on the relaxation degree when non-negative; the
  // admissible minimum always runs even if it sits above the cap.
  int sos_degree_cap = -1;
  int workers = 1;
};

struct SubproblemResult {
  Vec v;        // fixed values, aligned with fixed_set order
  Vec v_prime;  // empty when the path needs no enumeration
  double lower_bound = 0.0;
  std::optional<BiasInstance> witness;
  bool witness_valid = false;
  long nodes = 0;       // branch and bound nodes spent here
  long iterations = 0;  // interior point iterations summed over solves
  int max_degree = 0;   // highest relaxation degree reached, zero outside the hierarchy
};

struct VerificationOutcome {
  Verdict verdict;
  std::vector<SubproblemResult> subproblems;
  std::vector<std::string> warnings;
  // Candidate witnesses that failed re-validation, kept for diagnostics.
  std::vector<std::string> spurious_log;
};

// All ordered pairs (v, v') of feasible fixed-set assignments whose fixed
// coordinates already satisfy the block thresholds, lexicographic order.
// Throws SizeExceeded (with the computed count) past 10^5 pairs.
std::vector<std::pair<Vec, Vec>> enumerate_fixed_pairs(const VerificationTask& task);

// Half-width of the search box around a support vector: any point with a
// coordinate further away has squared distance above log(M w / eps) / gamma,
// so that kernel term contributes less than eps / M. Zero when even the
// center cannot (M w <= eps).
double rbf_search_radius(std::size_t entry_count, double weight, double gamma,
                         double epsilon);

VerificationOutcome verify_linear_regression(const VerificationTask& task);
VerificationOutcome verify_linear_classifier(const VerificationTask& task);
VerificationOutcome verify_poly_kernel(const VerificationTask& task,
                                       const VerifierConfig& config = {});
VerificationOutcome verify_rbf(const VerificationTask& task,
                               const RbfConfig& config = {}, int workers = 1);

// Largest prefix of the small discrete attributes whose enumerated pair
// count stays inside the guard; a reasonable default for fixed_set.
std::vector<int> default_fixed_set(const std::vector<FeatureDomain>& domains,
                                   const PerturbationSpec& spec);

// Dispatch on model family and mode, with the all-thresholds-zero fast path.
VerificationOutcome meta_verify(const VerificationTask& task,
                                const VerifierConfig& config = {});

}  // namespace fairver
