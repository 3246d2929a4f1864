#pragma once

// Sum-of-squares lower bounds for polynomial minimization.
//
// Two relaxation shapes: the unconstrained Gram form (is f - gamma a plain
// sum of squares) and the constrained Putinar form over a semi-algebraic set
// (f - gamma = sum_j sigma_j g_j with SOS multipliers sigma_j). Constrained
// bounds are residual-corrected against the actual returned Gram matrices,
// so they stay valid lower bounds even when the SDP stops short of full
// convergence. Unconstrained bounds are reported as solved, without that
// correction, since no box is available to absorb coefficient residue.

#include <optional>
#include <vector>

#include <fairver/polynomials.hpp>
#include <fairver/sdp.hpp>

namespace fairver {

struct SemiAlgebraicSet {
  int nvars = 0;
  Vec lo;  // the box rows' data, kept for residual correction
  Vec hi;
  // g_0 == 1 first, then z_i - lo_i and hi_i - z_i per finite box side,
  // then any added rows; every g is read as g(z) >= 0
  std::vector<Polynomial> constraints;

  static SemiAlgebraicSet box(const Vec& lo, const Vec& hi);
  void add(const Polynomial& g);
  void validate() const;
};

struct SosRelaxation {
  int nvars = 0;
  int degree = 0;
  int minimum_degree = 0;
  bool constrained = false;
  // set when a coefficient row has no matrix support but a nonzero target;
  // no certificate of any value exists at this degree
  bool structurally_infeasible = false;
  Polynomial objective_poly{0};
  std::vector<Polynomial> multipliers;      // g_j aligned with sdp blocks
  std::vector<MonomialBasis> block_bases;   // sigma_j Gram basis per block
  MonomialBasis row_basis;                  // all monomials of degree <= 2d
  std::vector<MultiIndex> rows;             // monomial matched by each sdp row
  Vec lo;
  Vec hi;
  SdpProblem sdp;
};

struct SosBound {
  int degree = 0;
  double bound = -kInf;         // valid lower bound (corrected when constrained)
  double solver_bound = -kInf;  // gamma as reported by the SDP, uncorrected
  SolveStatus status = SolveStatus::ToleranceReached;
  Vec moments;  // indexed by row_basis position; moments[0] == 1
  std::optional<Vec> candidate;
  bool candidate_certified = false;
  int iterations = 0;
};

int minimum_relaxation_degree(const Polynomial& f, const SemiAlgebraicSet& K);

SosRelaxation build_shor_sdp(const Polynomial& f, int d);
SosRelaxation build_putinar_sdp(const Polynomial& f, const SemiAlgebraicSet& K, int d);

SosBound solve_relaxation(const SosRelaxation& rel);

// First-order moments as a minimizer guess; certified only when feasible in
// the set (1e-6) and matching the bound (1e-5).
struct Candidate {
  Vec point;
  bool certified = false;
};
std::optional<Candidate> extract_candidate(const SosRelaxation& rel,
                                           const Vec& moments, double bound);

// Levels d_start..d_max with the best bound carried forward; stops early once
// the running bound reaches target or a level certifies a candidate.
std::vector<SosBound> run_hierarchy(const Polynomial& f, const SemiAlgebraicSet& K,
                                    int d_start, int d_max, double target);

}  // namespace fairver
