#include <fairver/sos.hpp>

#include <algorithm>
#include <cmath>

namespace fairver {

namespace {

MultiIndex add_indices(const MultiIndex& a, const MultiIndex& b) {
  MultiIndex r(a.size());
  for (size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
  return r;
}

int half_degree_up(int deg) { return (deg + 1) / 2; }

// sup over the box of |z^alpha|
double monomial_box_bound(const Vec& lo, const Vec& hi, const MultiIndex& alpha) {
  double v = 1.0;
  for (size_t i = 0; i < alpha.size(); ++i) {
    if (alpha[i] == 0) continue;
    const double m = std::max(std::abs(lo[static_cast<long>(i)]),
                              std::abs(hi[static_cast<long>(i)]));
    if (!std::isfinite(m)) return kInf;
    v *= std::pow(m, alpha[i]);
  }
  return v;
}

// shared assembly for both relaxation shapes; multipliers[0] must be g_0 == 1
SosRelaxation assemble(const Polynomial& f, std::vector<Polynomial> multipliers,
                       const Vec& lo, const Vec& hi, int d, int d0,
                       bool constrained) {
  const int n = f.nvars();
  SosRelaxation rel;
  rel.nvars = n;
  rel.degree = d;
  rel.minimum_degree = d0;
  rel.constrained = constrained;
  rel.objective_poly = f;
  rel.lo = lo;
  rel.hi = hi;
  rel.multipliers = std::move(multipliers);
  rel.row_basis = enumerate_basis(n, 2 * d);

  const int nb = static_cast<int>(rel.multipliers.size());
  rel.block_bases.reserve(nb);
  rel.sdp.block_sizes.reserve(nb);
  for (const Polynomial& g : rel.multipliers) {
    const int vj = half_degree_up(g.degree());
    rel.block_bases.push_back(enumerate_basis(n, d - vj));
    rel.sdp.block_sizes.push_back(static_cast<int>(rel.block_bases.back().size()));
  }

  rel.sdp.objective.reserve(nb);
  for (int j = 0; j < nb; ++j) {
    Mat c0 = Mat::Zero(rel.sdp.block_sizes[j], rel.sdp.block_sizes[j]);
    c0(0, 0) = rel.multipliers[j].constant_term();
    rel.sdp.objective.push_back(std::move(c0));
  }

  // one matching row per nonconstant monomial of degree <= 2d:
  //   sum_j <B_j^alpha, Q_j> = c_alpha,  B_j^alpha[p,q] = (g_j)_{alpha-b_p-b_q}
  std::vector<double> rhs;
  for (const MultiIndex& alpha : rel.row_basis.elements) {
    if (multi_index_degree(alpha) == 0) continue;
    std::vector<Mat> blocks(nb);
    bool any = false;
    for (int j = 0; j < nb; ++j) {
      const MonomialBasis& bb = rel.block_bases[j];
      const int s = static_cast<int>(bb.size());
      Mat B = Mat::Zero(s, s);
      for (const auto& [eta, gc] : rel.multipliers[j].terms()) {
        for (int p = 0; p < s; ++p) {
          for (int q = p; q < s; ++q) {
            MultiIndex need = alpha;
            bool ok = true;
            for (int i = 0; i < n && ok; ++i) {
              need[i] -= bb.elements[p][i] + bb.elements[q][i] + eta[i];
              if (need[i] != 0) ok = false;
            }
            if (!ok) continue;
            // Frobenius pairing counts both ordered off-diagonal slots
            B(p, q) += gc;
            if (q > p) B(q, p) += gc;
            any = true;
          }
        }
      }
      blocks[j] = std::move(B);
    }
    const double target = f.coefficient(alpha);
    if (!any) {
      if (std::abs(target) > 1e-12) {
        rel.structurally_infeasible = true;
        return rel;
      }
      continue;  // vacuous row
    }
    rel.rows.push_back(alpha);
    rel.sdp.constraints.push_back(std::move(blocks));
    rhs.push_back(target);
  }
  rel.sdp.rhs = Vec::Zero(static_cast<long>(rhs.size()));
  for (size_t k = 0; k < rhs.size(); ++k) rel.sdp.rhs[static_cast<long>(k)] = rhs[k];
  return rel;
}

}  // namespace

SemiAlgebraicSet SemiAlgebraicSet::box(const Vec& lo, const Vec& hi) {
  if (lo.size() != hi.size())
    fail(ErrorCode::DimensionMismatch, "box bound vectors differ in length");
  SemiAlgebraicSet K;
  K.nvars = static_cast<int>(lo.size());
  K.lo = lo;
  K.hi = hi;
  K.constraints.push_back(Polynomial::constant(K.nvars, 1.0));
  for (int i = 0; i < K.nvars; ++i) {
    if (lo[i] > hi[i]) fail(ErrorCode::InvalidSpec, "box lower bound above upper bound");
    if (std::isfinite(lo[i])) {
      Polynomial g = Polynomial::variable(K.nvars, i);
      g.add_term(MultiIndex(K.nvars, 0), -lo[i]);
      K.constraints.push_back(std::move(g));
    }
    if (std::isfinite(hi[i])) {
      Polynomial g = Polynomial::variable(K.nvars, i).scaled(-1.0);
      g.add_term(MultiIndex(K.nvars, 0), hi[i]);
      K.constraints.push_back(std::move(g));
    }
  }
  return K;
}

void SemiAlgebraicSet::add(const Polynomial& g) {
  if (g.nvars() != nvars)
    fail(ErrorCode::DimensionMismatch, "constraint variable count mismatch");
  constraints.push_back(g);
}

void SemiAlgebraicSet::validate() const {
  if (nvars < 1) fail(ErrorCode::InvalidSpec, "set needs at least one variable");
  if (lo.size() != nvars || hi.size() != nvars)
    fail(ErrorCode::DimensionMismatch, "box bound vectors do not match nvars");
  if (constraints.empty() || !(constraints.front().degree() == 0 &&
                               constraints.front().constant_term() == 1.0))
    fail(ErrorCode::InvalidSpec, "first constraint must be the constant one");
  for (const Polynomial& g : constraints)
    if (g.nvars() != nvars)
      fail(ErrorCode::DimensionMismatch, "constraint variable count mismatch");
}

int minimum_relaxation_degree(const Polynomial& f, const SemiAlgebraicSet& K) {
  int d0 = half_degree_up(f.degree());
  for (const Polynomial& g : K.constraints)
    d0 = std::max(d0, half_degree_up(g.degree()));
  return std::max(d0, 1);
}

SosRelaxation build_shor_sdp(const Polynomial& f, int d) {
  const int n = f.nvars();
  if (n < 1) fail(ErrorCode::InvalidSpec, "objective needs at least one variable");
  if (f.degree() > 2 * d)
    fail(ErrorCode::DegreeTooLow, "objective degree exceeds 2d");
  std::vector<Polynomial> mult{Polynomial::constant(n, 1.0)};
  const Vec open = Vec::Constant(n, kInf);
  return assemble(f, std::move(mult), -open, open, d,
                  std::max(half_degree_up(f.degree()), 1), false);
}

SosRelaxation build_putinar_sdp(const Polynomial& f, const SemiAlgebraicSet& K,
                                int d) {
  K.validate();
  if (f.nvars() != K.nvars)
    fail(ErrorCode::DimensionMismatch, "objective and set variable counts differ");
  const int d0 = minimum_relaxation_degree(f, K);
  if (d < d0) fail(ErrorCode::DegreeTooLow, "relaxation degree below the admissible minimum");
  return assemble(f, K.constraints, K.lo, K.hi, d, d0, true);
}

std::optional<Candidate> extract_candidate(const SosRelaxation& rel,
                                           const Vec& moments, double bound) {
  if (moments.size() != static_cast<long>(rel.row_basis.size())) return std::nullopt;
  Candidate c;
  c.point = Vec(rel.nvars);
  for (int i = 0; i < rel.nvars; ++i) {
    MultiIndex ei(rel.nvars, 0);
    ei[i] = 1;
    const long k = rel.row_basis.index_of(ei);
    if (k < 0) return std::nullopt;
    c.point[i] = moments[k];
  }
  if (!c.point.allFinite()) return std::nullopt;

  bool feasible = true;
  if (rel.constrained) {
    for (const Polynomial& g : rel.multipliers)
      if (g.evaluate(c.point) < -1e-6) feasible = false;
  }
  const double value = rel.objective_poly.evaluate(c.point);
  c.certified = feasible && std::isfinite(bound) && value <= bound + 1e-5;
  return c;
}

SosBound solve_relaxation(const SosRelaxation& rel) {
  SosBound out;
  out.degree = rel.degree;
  if (rel.structurally_infeasible) {
    out.status = SolveStatus::Infeasible;
    return out;
  }

  const SdpResult sr = solve_sdp(rel.sdp);
  out.status = sr.status;
  out.iterations = sr.iterations;
  if (sr.status == SolveStatus::Infeasible || sr.status == SolveStatus::Unbounded)
    return out;  // no degree-d certificate; level contributes -inf

  const double c0 = rel.objective_poly.constant_term();
  const double gamma = c0 + sr.objective;
  out.solver_bound = gamma;

  if (!rel.constrained) {
    // trust the solved gamma only when the SDP actually converged
    out.bound = sr.status == SolveStatus::Optimal ? gamma : -kInf;
  } else {
    // rebuild sum_j [z]'Q_j[z] g_j in coefficient space and charge every
    // discrepancy against the box, plus the eigenvalue floor of each block
    Polynomial::TermMap achieved;
    double floor_charge = 0.0;
    for (size_t j = 0; j < rel.multipliers.size(); ++j) {
      const Mat& Q = sr.Z[j];
      const MonomialBasis& bb = rel.block_bases[j];
      const int s = static_cast<int>(bb.size());
      for (int p = 0; p < s; ++p) {
        for (int q = p; q < s; ++q) {
          const double w = (p == q ? 1.0 : 2.0) * Q(p, q);
          if (w == 0.0) continue;
          const MultiIndex pq = add_indices(bb.elements[p], bb.elements[q]);
          for (const auto& [eta, gc] : rel.multipliers[j].terms())
            achieved[add_indices(pq, eta)] += w * gc;
        }
      }
      Eigen::SelfAdjointEigenSolver<Mat> eig(0.5 * (Q + Q.transpose()),
                                             Eigen::EigenvaluesOnly);
      const double eta_j = std::max(0.0, -eig.eigenvalues().minCoeff());
      if (eta_j > 0.0) {
        double tj = 0.0;
        for (const MultiIndex& beta : bb.elements)
          tj += monomial_box_bound(rel.lo, rel.hi, add_indices(beta, beta));
        double gj = 0.0;
        for (const auto& [eta, gc] : rel.multipliers[j].terms())
          gj += std::abs(gc) * monomial_box_bound(rel.lo, rel.hi, eta);
        floor_charge += eta_j * tj * gj;
      }
    }

    double residue_charge = 0.0;
    auto charge = [&](const MultiIndex& alpha, double r) {
      if (r == 0.0) return;
      residue_charge += std::abs(r) * monomial_box_bound(rel.lo, rel.hi, alpha);
    };
    for (const auto& [alpha, av] : achieved) {
      const double target = multi_index_degree(alpha) == 0
                                ? c0 - gamma
                                : rel.objective_poly.coefficient(alpha);
      charge(alpha, target - av);
    }
    for (const auto& [alpha, cv] : rel.objective_poly.terms()) {
      if (achieved.count(alpha)) continue;
      const double target = multi_index_degree(alpha) == 0 ? cv - gamma : cv;
      charge(alpha, target);
    }
    out.bound = gamma - residue_charge - floor_charge;
    if (std::isnan(out.bound)) out.bound = -kInf;
  }

  // dual multipliers negated give the moment sequence, anchored at 1
  out.moments = Vec::Zero(static_cast<long>(rel.row_basis.size()));
  out.moments[0] = 1.0;
  for (size_t k = 0; k < rel.rows.size(); ++k) {
    const long pos = rel.row_basis.index_of(rel.rows[k]);
    if (pos >= 0) out.moments[pos] = -sr.y[static_cast<long>(k)];
  }

  if (auto cand = extract_candidate(rel, out.moments, out.bound)) {
    out.candidate = cand->point;
    out.candidate_certified = cand->certified;
  }
  return out;
}

std::vector<SosBound> run_hierarchy(const Polynomial& f, const SemiAlgebraicSet& K,
                                    int d_start, int d_max, double target) {
  const int d0 = minimum_relaxation_degree(f, K);
  if (d_start < d0)
    fail(ErrorCode::DegreeTooLow, "hierarchy must start at the admissible degree");
  if (d_max < d_start)
    fail(ErrorCode::InvalidSpec, "hierarchy degree range is empty");

  std::vector<SosBound> levels;
  double best = -kInf;
  for (int d = d_start; d <= d_max; ++d) {
    SosBound b;
    try {
      b = solve_relaxation(build_putinar_sdp(f, K, d));
    } catch (const Error& err) {
      if (err.code() == ErrorCode::SizeExceeded) break;  // larger d only grows
      throw;
    }
    b.bound = std::max(b.bound, best);
    best = b.bound;
    levels.push_back(b);
    if (best >= target || levels.back().candidate_certified) break;
  }
  return levels;
}

}  // namespace fairver
