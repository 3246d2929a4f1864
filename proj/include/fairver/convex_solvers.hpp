#pragma once

// Certified continuous and mixed-integer convex solvers.
//
// Every solve returns both an incumbent objective value and a certified
// lower bound derived from weak duality, so callers can treat "bound >= t"
// conclusions as proofs rather than solver folklore. Minimization throughout.

#include <optional>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <fairver/core_model.hpp>
#include <fairver/errors.hpp>

namespace fairver {

using Mat = Eigen::MatrixXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Absolute gap under which a branch-and-bound node is fathomed against the
// incumbent. Sits well inside the 1e-6 accuracy promised to callers.
inline constexpr double kMipGap = 1e-8;

// A relaxation point counts as integral when every integer variable is
// within this distance of a whole number.
inline constexpr double kIntegralityTol = 1e-6;

inline constexpr long kMipNodeLimit = 1000000;

enum class SolveStatus {
  Optimal,
  Infeasible,
  Unbounded,
  ToleranceReached,
};

const char* solve_status_name(SolveStatus s);

struct SolveResult {
  SolveStatus status = SolveStatus::ToleranceReached;
  Vec z;  // empty when no point is available
  double objective = kInf;
  // Lower bound on the true optimum that holds regardless of solver
  // convergence: +inf for proven infeasible, -inf when nothing was certified.
  double certified_lower_bound = -kInf;
  double gap = kInf;
  int iterations = 0;
  long nodes = 0;
};

struct LinearProgram {
  Vec c;
  Mat A;  // inequality rows, A z <= b
  Vec b;
  Mat E;  // equality rows, E z = e
  Vec e;
  Vec lo;
  Vec hi;

  static LinearProgram make(int nvars);
  int nvars() const { return static_cast<int>(c.size()); }
  void add_inequality(const Vec& row, double rhs);
  void add_equality(const Vec& row, double rhs);
  void validate() const;  // throws Error on malformed shapes
};

struct QuadraticProgram {
  Mat H;  // symmetric positive semidefinite
  LinearProgram lin;

  static QuadraticProgram make(int nvars);
  int nvars() const { return lin.nvars(); }
  void validate() const;
};

struct MixedIntegerSpec {
  std::variant<LinearProgram, QuadraticProgram> base;
  std::vector<int> integer_vars;  // indices constrained to whole numbers

  int nvars() const;
  void validate() const;
};

SolveResult solve_lp(const LinearProgram& lp);
SolveResult solve_qp(const QuadraticProgram& qp);
SolveResult solve_mip(const MixedIntegerSpec& spec);

}  // namespace fairver
