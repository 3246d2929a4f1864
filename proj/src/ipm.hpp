#pragma once

// Dense primal-dual interior point core shared by the LP and QP front ends.
// Solves  min 0.5 z'Hz + c'z  s.t.  Gz <= h, Ez = e, lo <= z <= hi
// with H positive semidefinite (H of size 0x0 means a pure LP).
//
// Box bounds are folded into inequality rows internally; the returned
// multipliers cover the caller's G rows only.

#include <fairver/convex_solvers.hpp>

namespace fairver::detail {

struct IpmProblem {
  Mat H;  // 0x0 when linear
  Vec c;
  Mat G;
  Vec h;
  Mat E;
  Vec e;
  Vec lo;
  Vec hi;

  int nvars() const { return static_cast<int>(c.size()); }
  bool has_quadratic() const { return H.rows() > 0; }
};

struct IpmOutcome {
  bool converged = false;
  Vec z;
  Vec lambda;  // multipliers for the G rows only, >= 0 at convergence
  Vec nu;      // multipliers for the E rows
  double objective = 0.0;
  double certified_lower_bound = -kInf;
  int iterations = 0;
  double primal_residual = kInf;
  double dual_residual = kInf;
  double mu = kInf;
};

IpmOutcome ipm_solve(const IpmProblem& p, int max_iters = 100);

// Weak-duality lower bound on the optimum, valid for any lambda (negative
// entries are clamped to zero) and any z, nu:
//   r = Hz + c + G'max(lambda,0) + E'nu
//   bound = sum_i min(r_i lo_i, r_i hi_i) - 0.5 z'Hz - h'max(lambda,0) - e'nu
// Returns -inf when a term needs an infinite box side.
double certified_bound(const IpmProblem& p, const Vec& z, const Vec& lambda,
                       const Vec& nu);

}  // namespace fairver::detail
