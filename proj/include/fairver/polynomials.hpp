#pragma once

#include <map>
#include <vector>

#include "fairver/core_model.hpp"

namespace fairver {

using MultiIndex = std::vector<int>;

inline int multi_index_degree(const MultiIndex& a) {
  int d = 0;
  for (int e : a) d += e;
  return d;
}

// Graded lexicographic order: lower total degree first; within a degree,
// larger exponent on the earliest variable first, so for two variables the
// degree-2 layer reads x1^2, x1 x2, x2^2.
struct GradedLexLess {
  bool operator()(const MultiIndex& a, const MultiIndex& b) const {
    const int da = multi_index_degree(a);
    const int db = multi_index_degree(b);
    if (da != db) return da < db;
    for (std::size_t k = 0; k < a.size() && k < b.size(); ++k)
      if (a[k] != b[k]) return a[k] > b[k];
    return false;
  }
};

// Sparse multivariate polynomial with canonical term storage: no zero
// coefficients, terms ordered graded-lex for deterministic iteration.
class Polynomial {
 public:
  using TermMap = std::map<MultiIndex, double, GradedLexLess>;

  explicit Polynomial(int nvars);
  static Polynomial constant(int nvars, double c);
  static Polynomial variable(int nvars, int i);
  static Polynomial monomial(int nvars, MultiIndex alpha, double c);

  int nvars() const { return nvars_; }
  const TermMap& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  int degree() const;
  double coefficient(const MultiIndex& alpha) const;
  double constant_term() const;

  void add_term(const MultiIndex& alpha, double c);

  Polynomial operator+(const Polynomial& other) const;
  Polynomial operator-(const Polynomial& other) const;
  Polynomial operator*(const Polynomial& other) const;
  Polynomial scaled(double s) const;
  Polynomial pow(int k) const;  // k >= 1

  double evaluate(const Vec& x) const;
  // Fix variable var to a constant; nvars is unchanged.
  Polynomial substitute(int var, double value) const;
  // Identify variable drop with variable keep (x_drop := x_keep).
  Polynomial merge_variables(int keep, int drop) const;
  // Re-index variables: new_index[v] is v's slot in the result, or -1 for
  // variables that must not occur in any term.
  Polynomial rename_variables(const std::vector<int>& new_index, int new_nvars) const;
  std::vector<int> used_variables() const;

 private:
  int nvars_;
  TermMap terms_;
};

// All monomials in n variables of total degree <= d, graded-lex ordered.
struct MonomialBasis {
  int nvars = 0;
  int degree = 0;
  std::vector<MultiIndex> elements;

  std::size_t size() const { return elements.size(); }
  // Position of alpha, or -1 when |alpha| > degree.
  long index_of(const MultiIndex& alpha) const;

 private:
  friend MonomialBasis enumerate_basis(int n, int d);
  std::map<MultiIndex, long, GradedLexLess> index_;
};

// binomial(n + d, d); throws SizeExceeded past the 10^6 element guard.
std::size_t basis_size(int n, int d);
MonomialBasis enumerate_basis(int n, int d);

// Explicit polynomial form of a polynomial-kernel decision function.
Polynomial expand_poly_kernel(const PolyKernelModel& model);

// g(x, x') = p(x) - p(x') in 2n variables; x occupies slots 0..n-1 and
// x' slots n..2n-1.
Polynomial build_gap_polynomial(const Polynomial& p);

// Vanishing polynomial for the shifted integer range {lo, ..., lo + k}.
Polynomial vanishing_polynomial(int nvars, int var, double lo, int k);

// Degree-(k+1) polynomial in variable var vanishing exactly on {0, ..., k}.
// Capped at k <= 2: larger discrete ranges are meant to be fixed or relaxed.
Polynomial integrality_polynomial(int nvars, int var, int k);

}  // namespace fairver
