#include "fairver/polynomials.hpp"

#include <algorithm>
#include <cmath>

namespace fairver {

Polynomial::Polynomial(int nvars) : nvars_(nvars) {
  if (nvars < 0) fail(ErrorCode::InvalidSpec, "negative variable count");
}

Polynomial Polynomial::constant(int nvars, double c) {
  Polynomial p(nvars);
  p.add_term(MultiIndex(static_cast<std::size_t>(nvars), 0), c);
  return p;
}

Polynomial Polynomial::variable(int nvars, int i) {
  MultiIndex alpha(static_cast<std::size_t>(nvars), 0);
  alpha.at(static_cast<std::size_t>(i)) = 1;
  return monomial(nvars, alpha, 1.0);
}

Polynomial Polynomial::monomial(int nvars, MultiIndex alpha, double c) {
  Polynomial p(nvars);
  p.add_term(alpha, c);
  return p;
}

int Polynomial::degree() const {
  int d = 0;
  for (const auto& [alpha, c] : terms_) d = std::max(d, multi_index_degree(alpha));
  return d;
}

double Polynomial::coefficient(const MultiIndex& alpha) const {
  auto it = terms_.find(alpha);
  return it == terms_.end() ? 0.0 : it->second;
}

double Polynomial::constant_term() const {
  return coefficient(MultiIndex(static_cast<std::size_t>(nvars_), 0));
}

void Polynomial::add_term(const MultiIndex& alpha, double c) {
  if (static_cast<int>(alpha.size()) != nvars_)
    fail(ErrorCode::DimensionMismatch, "multi-index length != nvars");
  for (int e : alpha)
    if (e < 0) fail(ErrorCode::InvalidSpec, "negative exponent");
  if (c == 0.0) return;
  auto [it, inserted] = terms_.try_emplace(alpha, c);
  if (!inserted) {
    it->second += c;
    if (it->second == 0.0) terms_.erase(it);
  }
}

Polynomial Polynomial::operator+(const Polynomial& other) const {
  if (nvars_ != other.nvars_)
    fail(ErrorCode::DimensionMismatch, "polynomial nvars mismatch");
  Polynomial out = *this;
  for (const auto& [alpha, c] : other.terms_) out.add_term(alpha, c);
  return out;
}

Polynomial Polynomial::operator-(const Polynomial& other) const {
  return *this + other.scaled(-1.0);
}

Polynomial Polynomial::operator*(const Polynomial& other) const {
  if (nvars_ != other.nvars_)
    fail(ErrorCode::DimensionMismatch, "polynomial nvars mismatch");
  Polynomial out(nvars_);
  MultiIndex sum(static_cast<std::size_t>(nvars_), 0);
  for (const auto& [a, ca] : terms_) {
    for (const auto& [b, cb] : other.terms_) {
      for (int k = 0; k < nvars_; ++k)
        sum[static_cast<std::size_t>(k)] =
            a[static_cast<std::size_t>(k)] + b[static_cast<std::size_t>(k)];
      out.add_term(sum, ca * cb);
    }
  }
  return out;
}

Polynomial Polynomial::scaled(double s) const {
  Polynomial out(nvars_);
  if (s == 0.0) return out;
  for (const auto& [alpha, c] : terms_) out.add_term(alpha, c * s);
  return out;
}

Polynomial Polynomial::pow(int k) const {
  if (k < 1) fail(ErrorCode::InvalidSpec, "power exponent must be >= 1");
  Polynomial result = constant(nvars_, 1.0);
  Polynomial base = *this;
  int e = k;
  while (e > 0) {
    if (e & 1) result = result * base;
    base = (e >>= 1) > 0 ? base * base : base;
  }
  return result;
}

double Polynomial::evaluate(const Vec& x) const {
  if (x.size() != nvars_)
    fail(ErrorCode::DimensionMismatch, "evaluate: point dimension != nvars");
  double acc = 0.0;
  for (const auto& [alpha, c] : terms_) {
    double term = c;
    for (int k = 0; k < nvars_; ++k) {
      const double xv = x[k];
      for (int e = 0; e < alpha[static_cast<std::size_t>(k)]; ++e) term *= xv;
    }
    acc += term;
  }
  return acc;
}

Polynomial Polynomial::substitute(int var, double value) const {
  Polynomial out(nvars_);
  for (const auto& [alpha, c] : terms_) {
    const int e = alpha.at(static_cast<std::size_t>(var));
    double factor = 1.0;
    for (int k = 0; k < e; ++k) factor *= value;
    MultiIndex beta = alpha;
    beta[static_cast<std::size_t>(var)] = 0;
    out.add_term(beta, c * factor);
  }
  return out;
}

Polynomial Polynomial::merge_variables(int keep, int drop) const {
  Polynomial out(nvars_);
  for (const auto& [alpha, c] : terms_) {
    MultiIndex beta = alpha;
    beta.at(static_cast<std::size_t>(keep)) += beta.at(static_cast<std::size_t>(drop));
    beta[static_cast<std::size_t>(drop)] = 0;
    out.add_term(beta, c);
  }
  return out;
}

Polynomial Polynomial::rename_variables(const std::vector<int>& new_index,
                                        int new_nvars) const {
  if (static_cast<int>(new_index.size()) != nvars_)
    fail(ErrorCode::DimensionMismatch, "rename map length != nvars");
  Polynomial out(new_nvars);
  for (const auto& [alpha, c] : terms_) {
    MultiIndex beta(static_cast<std::size_t>(new_nvars), 0);
    for (int k = 0; k < nvars_; ++k) {
      const int e = alpha[static_cast<std::size_t>(k)];
      if (e == 0) continue;
      const int target = new_index[static_cast<std::size_t>(k)];
      if (target < 0 || target >= new_nvars)
        fail(ErrorCode::InvalidSpec, "rename drops a live variable");
      beta[static_cast<std::size_t>(target)] += e;
    }
    out.add_term(beta, c);
  }
  return out;
}

std::vector<int> Polynomial::used_variables() const {
  std::vector<bool> used(static_cast<std::size_t>(nvars_), false);
  for (const auto& [alpha, c] : terms_)
    for (int k = 0; k < nvars_; ++k)
      if (alpha[static_cast<std::size_t>(k)] > 0) used[static_cast<std::size_t>(k)] = true;
  std::vector<int> out;
  for (int k = 0; k < nvars_; ++k)
    if (used[static_cast<std::size_t>(k)]) out.push_back(k);
  return out;
}

long MonomialBasis::index_of(const MultiIndex& alpha) const {
  auto it = index_.find(alpha);
  return it == index_.end() ? -1 : it->second;
}

std::size_t basis_size(int n, int d) {
  // binomial(n + d, d) via the exact product form
  std::size_t num = 1;
  for (int k = 1; k <= d; ++k) {
    num = num * static_cast<std::size_t>(n + k) / static_cast<std::size_t>(k);
    if (num > 100000000ULL) fail(ErrorCode::SizeExceeded, "basis size overflow");
  }
  return num;
}

namespace {

void enumerate_exact_degree(int nvars, int pos, int remaining, MultiIndex& work,
                            std::vector<MultiIndex>& out) {
  if (pos == nvars - 1) {
    work[static_cast<std::size_t>(pos)] = remaining;
    out.push_back(work);
    return;
  }
  for (int e = remaining; e >= 0; --e) {
    work[static_cast<std::size_t>(pos)] = e;
    enumerate_exact_degree(nvars, pos + 1, remaining - e, work, out);
  }
  work[static_cast<std::size_t>(pos)] = 0;
}

}  // namespace

MonomialBasis enumerate_basis(int n, int d) {
  if (n < 1 || d < 0) fail(ErrorCode::InvalidSpec, "enumerate_basis needs n >= 1, d >= 0");
  if (basis_size(n, d) > 1000000ULL)
    fail(ErrorCode::SizeExceeded, "monomial basis exceeds 10^6 elements");
  MonomialBasis basis;
  basis.nvars = n;
  basis.degree = d;
  MultiIndex work(static_cast<std::size_t>(n), 0);
  for (int deg = 0; deg <= d; ++deg)
    enumerate_exact_degree(n, 0, deg, work, basis.elements);
  for (std::size_t i = 0; i < basis.elements.size(); ++i)
    basis.index_[basis.elements[i]] = static_cast<long>(i);
  return basis;
}

Polynomial expand_poly_kernel(const PolyKernelModel& model) {
  validate_model(ModelSpec{model});
  const int n = static_cast<int>(model.entries.front().sv.size());
  Polynomial out(n);
  for (const auto& entry : model.entries) {
    Polynomial affine = Polynomial::constant(n, model.offset);
    for (int j = 0; j < n; ++j) {
      const double coeff = model.scale * entry.sv[j];
      if (coeff == 0.0) continue;
      MultiIndex alpha(static_cast<std::size_t>(n), 0);
      alpha[static_cast<std::size_t>(j)] = 1;
      affine.add_term(alpha, coeff);
    }
    out = out + affine.pow(model.degree).scaled(entry.weight * entry.label);
  }
  return out;
}

Polynomial build_gap_polynomial(const Polynomial& p) {
  const int n = p.nvars();
  Polynomial g(2 * n);
  for (const auto& [alpha, c] : p.terms()) {
    MultiIndex left(static_cast<std::size_t>(2 * n), 0);
    MultiIndex right(static_cast<std::size_t>(2 * n), 0);
    for (int k = 0; k < n; ++k) {
      left[static_cast<std::size_t>(k)] = alpha[static_cast<std::size_t>(k)];
      right[static_cast<std::size_t>(n + k)] = alpha[static_cast<std::size_t>(k)];
    }
    g.add_term(left, c);
    g.add_term(right, -c);
  }
  return g;
}

Polynomial vanishing_polynomial(int nvars, int var, double lo, int k) {
  Polynomial x = Polynomial::variable(nvars, var);
  Polynomial out = x - Polynomial::constant(nvars, lo);
  for (int j = 1; j <= k; ++j)
    out = out * (x - Polynomial::constant(nvars, lo + j));
  return out;
}

Polynomial integrality_polynomial(int nvars, int var, int k) {
  if (k < 1 || k > 2)
    fail(ErrorCode::UnsupportedIntegrality,
         "integrality polynomial capped at ranges of 2 or 3 values");
  return vanishing_polynomial(nvars, var, 0.0, k);
}

}  // namespace fairver
