#pragma once

// Dense block-diagonal semidefinite programming.
//
// Problems are stated in the form
//   maximize  -A0 . Z   subject to  Ak . Z = c_k (k = 1..K),  Z >= 0 (psd)
// where "." is the trace inner product and every matrix shares one block
// structure. The dual vector y satisfies A0 - sum_k y_k Ak = S >= 0 at
// optimality, which downstream code uses for moment readout and for
// residual-corrected bounds.

#include <vector>

#include <fairver/convex_solvers.hpp>

namespace fairver {

struct SdpProblem {
  std::vector<int> block_sizes;
  std::vector<Mat> objective;                 // A0, one symmetric matrix per block
  std::vector<std::vector<Mat>> constraints;  // constraints[k][block]
  Vec rhs;                                    // c_k

  int nconstraints() const { return static_cast<int>(rhs.size()); }
  void validate() const;
};

struct SdpResult {
  SolveStatus status = SolveStatus::ToleranceReached;
  std::vector<Mat> Z;  // primal blocks, kept strictly psd by the solver
  Vec y;               // one multiplier per constraint
  double objective = -kInf;       // value of -A0 . Z
  double dual_objective = kInf;   // value of -c'y
  double gap = kInf;
  double primal_residual = kInf;  // max_k |Ak . Z - c_k|
  double dual_residual = kInf;    // max entry of |A0 - sum y_k Ak - S|
  double min_eigenvalue = 0.0;    // over the returned Z blocks
  int iterations = 0;
};

SdpResult solve_sdp(const SdpProblem& p);

}  // namespace fairver
