#include <fairver/convex_solvers.hpp>

#include <algorithm>
#include <cmath>
#include <queue>
#include <tuple>

#include "ipm.hpp"

namespace fairver {

namespace {

using detail::IpmOutcome;
using detail::IpmProblem;

bool all_finite(const Vec& v) {
  for (long i = 0; i < v.size(); ++i)
    if (!std::isfinite(v[i])) return false;
  return true;
}

bool no_nan(const Vec& v) {
  for (long i = 0; i < v.size(); ++i)
    if (std::isnan(v[i])) return false;
  return true;
}

bool all_finite(const Mat& m) {
  return m.size() == 0 || m.allFinite();
}

void check_rows(const Mat& A, const Vec& b, int n, const char* what) {
  if (A.rows() != b.size())
    fail(ErrorCode::DimensionMismatch, std::string(what) + " rows do not match rhs length");
  if (A.rows() > 0 && A.cols() != n)
    fail(ErrorCode::DimensionMismatch, std::string(what) + " column count does not match variable count");
  if (!all_finite(A) || !all_finite(b))
    fail(ErrorCode::InvalidSpec, std::string(what) + " contains non-finite entries");
}

// Variable elimination outcome. Fixed variables (box collapsed to a point)
// are substituted out; `keep` maps reduced indices back to original ones.
struct Reduced {
  IpmProblem p;
  std::vector<int> keep;
  Vec full_point;  // fixed values filled in, kept slots zero
  double offset = 0.0;
};

Vec reassemble(const Reduced& red, const Vec& zred) {
  Vec z = red.full_point;
  for (size_t j = 0; j < red.keep.size(); ++j) z[red.keep[j]] = zred[j];
  return z;
}

SolveResult infeasible_result(bool certified) {
  SolveResult r;
  r.status = SolveStatus::Infeasible;
  r.objective = kInf;
  r.certified_lower_bound = certified ? kInf : -kInf;
  r.gap = 0.0;
  return r;
}

// Substitutes fixed variables out of q and drops rows with no remaining
// support. Returns a final result directly when that already settles the
// problem.
std::variant<SolveResult, Reduced> presolve(const IpmProblem& q) {
  const int n = q.nvars();
  Reduced red;
  red.full_point = Vec::Zero(n);
  std::vector<bool> fixed(n, false);
  for (int i = 0; i < n; ++i) {
    if (q.lo[i] > q.hi[i]) return infeasible_result(true);
    if (std::isfinite(q.lo[i]) && std::isfinite(q.hi[i]) &&
        q.hi[i] - q.lo[i] <= 1e-12) {
      fixed[i] = true;
      red.full_point[i] = 0.5 * (q.lo[i] + q.hi[i]);
    } else {
      red.keep.push_back(i);
    }
  }
  const int nk = static_cast<int>(red.keep.size());

  // objective restricted to the kept variables
  Vec cr(nk);
  for (int j = 0; j < nk; ++j) cr[j] = q.c[red.keep[j]];
  Mat Hr;
  if (q.has_quadratic()) {
    Hr = Mat::Zero(nk, nk);
    for (int a = 0; a < nk; ++a)
      for (int b = 0; b < nk; ++b) Hr(a, b) = q.H(red.keep[a], red.keep[b]);
    const Vec hv = q.H * red.full_point;
    for (int j = 0; j < nk; ++j) cr[j] += hv[red.keep[j]];
    red.offset += 0.5 * red.full_point.dot(hv);
  }
  red.offset += q.c.dot(red.full_point);

  auto reduce = [&](const Mat& A, const Vec& b, bool equality, Mat& Ar,
                    Vec& br) -> bool {
    std::vector<int> rows;
    for (long i = 0; i < A.rows(); ++i) {
      const double rhs = b[i] - A.row(i).dot(red.full_point);
      bool zero = true;
      for (int j = 0; j < nk && zero; ++j)
        if (A(i, red.keep[j]) != 0.0) zero = false;
      if (zero) {
        if (equality ? std::abs(rhs) > 1e-9 : rhs < -1e-9) return false;
        continue;
      }
      rows.push_back(static_cast<int>(i));
    }
    Ar = Mat::Zero(static_cast<long>(rows.size()), nk);
    br = Vec::Zero(static_cast<long>(rows.size()));
    for (size_t r = 0; r < rows.size(); ++r) {
      const long i = rows[r];
      for (int j = 0; j < nk; ++j) Ar(static_cast<long>(r), j) = A(i, red.keep[j]);
      br[static_cast<long>(r)] = b[i] - A.row(i).dot(red.full_point);
    }
    return true;
  };

  Mat Gr, Er;
  Vec hr, er;
  if (!reduce(q.G, q.h, false, Gr, hr)) return infeasible_result(true);
  if (!reduce(q.E, q.e, true, Er, er)) return infeasible_result(true);

  if (nk == 0) {
    SolveResult r;
    r.status = SolveStatus::Optimal;
    r.z = red.full_point;
    r.objective = red.offset;
    r.certified_lower_bound = red.offset;
    r.gap = 0.0;
    return r;
  }

  red.p.H = std::move(Hr);
  red.p.c = std::move(cr);
  red.p.G = std::move(Gr);
  red.p.h = std::move(hr);
  red.p.E = std::move(Er);
  red.p.e = std::move(er);
  red.p.lo = Vec(nk);
  red.p.hi = Vec(nk);
  for (int j = 0; j < nk; ++j) {
    red.p.lo[j] = q.lo[red.keep[j]];
    red.p.hi[j] = q.hi[red.keep[j]];
  }
  return red;
}

// Feasibility restoration: minimize the total elastic violation of the
// general and equality rows. A certified positive optimum proves the
// original constraint system empty.
IpmOutcome phase_one(const IpmProblem& p) {
  const int n = p.nvars();
  const int mg = static_cast<int>(p.G.rows());
  const int me = static_cast<int>(p.E.rows());
  const int nt = mg + me;
  IpmProblem f;
  f.c = Vec::Zero(n + nt);
  f.c.tail(nt).setOnes();
  f.G = Mat::Zero(mg + 2 * me, n + nt);
  f.h = Vec::Zero(mg + 2 * me);
  for (int i = 0; i < mg; ++i) {
    f.G.block(i, 0, 1, n) = p.G.row(i);
    f.G(i, n + i) = -1.0;
    f.h[i] = p.h[i];
  }
  for (int j = 0; j < me; ++j) {
    const int r1 = mg + 2 * j;
    f.G.block(r1, 0, 1, n) = p.E.row(j);
    f.G(r1, n + mg + j) = -1.0;
    f.h[r1] = p.e[j];
    f.G.block(r1 + 1, 0, 1, n) = -p.E.row(j);
    f.G(r1 + 1, n + mg + j) = -1.0;
    f.h[r1 + 1] = -p.e[j];
  }
  f.lo = Vec::Constant(n + nt, -kInf);
  f.hi = Vec::Constant(n + nt, kInf);
  f.lo.head(n) = p.lo;
  f.hi.head(n) = p.hi;
  f.lo.tail(nt).setZero();
  // Cap the elastics at a level any repair would stay under. Any cap is
  // sound: a feasible original point keeps all elastics at zero, so a
  // positive certified optimum of the capped problem still proves the
  // original system empty. Finite caps keep the dual bound computable.
  Vec z0(n);
  for (int i = 0; i < n; ++i) {
    const bool lf = std::isfinite(p.lo[i]), hf = std::isfinite(p.hi[i]);
    z0[i] = lf && hf ? 0.5 * (p.lo[i] + p.hi[i]) : (lf ? p.lo[i] : (hf ? p.hi[i] : 0.0));
  }
  double worst = 1.0;
  if (mg > 0) worst = std::max(worst, (p.G * z0 - p.h).maxCoeff());
  if (me > 0) worst = std::max(worst, (p.E * z0 - p.e).cwiseAbs().maxCoeff());
  f.hi.tail(nt).setConstant(4.0 * worst + 16.0);
  return detail::ipm_solve(f);
}

// Looks for a feasible ray that improves the objective forever.
bool has_unbounded_ray(const IpmProblem& p) {
  const int n = p.nvars();
  bool any_open = false;
  for (int i = 0; i < n; ++i)
    if (!std::isfinite(p.lo[i]) || !std::isfinite(p.hi[i])) any_open = true;
  if (!any_open) return false;

  IpmProblem r;
  r.c = p.c;
  r.G = p.G;
  r.h = Vec::Zero(p.G.rows());
  const int extra = p.has_quadratic() ? n : 0;
  r.E = Mat::Zero(p.E.rows() + extra, n);
  r.e = Vec::Zero(p.E.rows() + extra);
  if (p.E.rows() > 0) r.E.topRows(p.E.rows()) = p.E;
  if (extra > 0) r.E.bottomRows(n) = p.H;
  r.lo = Vec(n);
  r.hi = Vec(n);
  for (int i = 0; i < n; ++i) {
    r.lo[i] = std::isfinite(p.lo[i]) ? 0.0 : -1.0;
    r.hi[i] = std::isfinite(p.hi[i]) ? 0.0 : 1.0;
  }
  const IpmOutcome out = detail::ipm_solve(r);
  return out.converged && out.objective < -1e-9;
}

SolveResult solve_continuous(const IpmProblem& q) {
  auto pre = presolve(q);
  if (std::holds_alternative<SolveResult>(pre)) return std::get<SolveResult>(pre);
  Reduced& red = std::get<Reduced>(pre);

  const IpmOutcome out = detail::ipm_solve(red.p);
  SolveResult r;
  r.iterations = out.iterations;
  if (out.converged) {
    r.status = SolveStatus::Optimal;
    r.z = reassemble(red, out.z);
    r.objective = out.objective + red.offset;
    r.certified_lower_bound = out.certified_lower_bound + red.offset;
    r.gap = r.objective - r.certified_lower_bound;
    return r;
  }

  if (red.p.G.rows() + red.p.E.rows() > 0) {
    const IpmOutcome ph1 = phase_one(red.p);
    r.iterations += ph1.iterations;
    if (ph1.certified_lower_bound > 1e-7) return infeasible_result(true);
    // positive violation but no dual certificate (open boxes): report the
    // belief, keep the bound honest at -inf
    if (ph1.objective > 1e-7) return infeasible_result(false);
  }

  if (has_unbounded_ray(red.p)) {
    r.status = SolveStatus::Unbounded;
    r.z = reassemble(red, out.z);
    r.objective = -kInf;
    r.certified_lower_bound = -kInf;
    r.gap = 0.0;
    return r;
  }

  r.status = SolveStatus::ToleranceReached;
  r.z = reassemble(red, out.z);
  r.objective = out.objective + red.offset;
  r.certified_lower_bound = out.certified_lower_bound + red.offset;
  r.gap = r.objective - r.certified_lower_bound;
  return r;
}

IpmProblem to_problem(const LinearProgram& lp, const Mat* H) {
  IpmProblem p;
  if (H != nullptr) p.H = *H;
  p.c = lp.c;
  p.G = lp.A;
  p.h = lp.b;
  p.E = lp.E;
  p.e = lp.e;
  p.lo = lp.lo;
  p.hi = lp.hi;
  return p;
}

}  // namespace

const char* solve_status_name(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "Optimal";
    case SolveStatus::Infeasible: return "Infeasible";
    case SolveStatus::Unbounded: return "Unbounded";
    case SolveStatus::ToleranceReached: return "ToleranceReached";
  }
  return "Unknown";
}

LinearProgram LinearProgram::make(int nvars) {
  if (nvars < 1) fail(ErrorCode::InvalidSpec, "program needs at least one variable");
  LinearProgram lp;
  lp.c = Vec::Zero(nvars);
  lp.A = Mat::Zero(0, nvars);
  lp.b = Vec::Zero(0);
  lp.E = Mat::Zero(0, nvars);
  lp.e = Vec::Zero(0);
  lp.lo = Vec::Constant(nvars, -kInf);
  lp.hi = Vec::Constant(nvars, kInf);
  return lp;
}

void LinearProgram::add_inequality(const Vec& row, double rhs) {
  if (row.size() != c.size())
    fail(ErrorCode::DimensionMismatch, "inequality row length does not match variable count");
  A.conservativeResize(A.rows() + 1, Eigen::NoChange);
  A.row(A.rows() - 1) = row;
  b.conservativeResize(b.size() + 1);
  b[b.size() - 1] = rhs;
}

void LinearProgram::add_equality(const Vec& row, double rhs) {
  if (row.size() != c.size())
    fail(ErrorCode::DimensionMismatch, "equality row length does not match variable count");
  E.conservativeResize(E.rows() + 1, Eigen::NoChange);
  E.row(E.rows() - 1) = row;
  e.conservativeResize(e.size() + 1);
  e[e.size() - 1] = rhs;
}

void LinearProgram::validate() const {
  const int n = nvars();
  if (n < 1) fail(ErrorCode::InvalidSpec, "program needs at least one variable");
  if (!all_finite(c)) fail(ErrorCode::InvalidSpec, "objective contains non-finite entries");
  check_rows(A, b, n, "inequality");
  check_rows(E, e, n, "equality");
  if (lo.size() != n || hi.size() != n)
    fail(ErrorCode::DimensionMismatch, "bound vectors do not match variable count");
  if (!no_nan(lo) || !no_nan(hi))
    fail(ErrorCode::InvalidSpec, "bounds contain NaN");
}

QuadraticProgram QuadraticProgram::make(int nvars) {
  QuadraticProgram qp;
  qp.lin = LinearProgram::make(nvars);
  qp.H = Mat::Zero(nvars, nvars);
  return qp;
}

void QuadraticProgram::validate() const {
  lin.validate();
  const int n = nvars();
  if (H.rows() != n || H.cols() != n)
    fail(ErrorCode::DimensionMismatch, "quadratic term is not n by n");
  if (!all_finite(H)) fail(ErrorCode::InvalidSpec, "quadratic term contains non-finite entries");
  const double scale = 1.0 + H.cwiseAbs().maxCoeff();
  if ((H - H.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale)
    fail(ErrorCode::InvalidSpec, "quadratic term must be symmetric");
}

int MixedIntegerSpec::nvars() const {
  return std::visit([](const auto& b) { return b.nvars(); }, base);
}

void MixedIntegerSpec::validate() const {
  std::visit([](const auto& b) { b.validate(); }, base);
  const int n = nvars();
  std::vector<int> seen;
  for (int v : integer_vars) {
    if (v < 0 || v >= n)
      fail(ErrorCode::InvalidSpec, "integer variable index out of range");
    seen.push_back(v);
  }
  std::sort(seen.begin(), seen.end());
  if (std::adjacent_find(seen.begin(), seen.end()) != seen.end())
    fail(ErrorCode::InvalidSpec, "duplicate integer variable index");
}

SolveResult solve_lp(const LinearProgram& lp) {
  lp.validate();
  return solve_continuous(to_problem(lp, nullptr));
}

SolveResult solve_qp(const QuadraticProgram& qp) {
  qp.validate();
  Mat Hs = 0.5 * (qp.H + qp.H.transpose());
  if (Hs.cwiseAbs().maxCoeff() > 0.0) {
    Eigen::SelfAdjointEigenSolver<Mat> eig(Hs, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() < -1e-8)
      fail(ErrorCode::NonConvex, "quadratic term has a negative eigenvalue");
  }
  return solve_continuous(to_problem(qp.lin, &Hs));
}

namespace {

struct BranchNode {
  Vec lo;
  Vec hi;
  double bound;
  long id;
};

struct NodeOrder {
  bool operator()(const BranchNode& a, const BranchNode& b) const {
    return std::tie(a.bound, a.id) > std::tie(b.bound, b.id);
  }
};

SolveResult solve_node(const IpmProblem& base, const Vec& lo, const Vec& hi) {
  IpmProblem p = base;
  p.lo = lo;
  p.hi = hi;
  return solve_continuous(p);
}

bool point_feasible(const IpmProblem& p, const Vec& z, double tol) {
  for (int i = 0; i < p.nvars(); ++i) {
    if (z[i] < p.lo[i] - tol || z[i] > p.hi[i] + tol) return false;
  }
  if (p.G.rows() > 0 && ((p.G * z - p.h).maxCoeff() > tol)) return false;
  if (p.E.rows() > 0 && ((p.E * z - p.e).cwiseAbs().maxCoeff() > tol)) return false;
  return true;
}

}  // namespace

SolveResult solve_mip(const MixedIntegerSpec& spec) {
  spec.validate();
  const LinearProgram& lin = std::holds_alternative<LinearProgram>(spec.base)
                                 ? std::get<LinearProgram>(spec.base)
                                 : std::get<QuadraticProgram>(spec.base).lin;
  Mat Hs;
  const Mat* hp = nullptr;
  if (std::holds_alternative<QuadraticProgram>(spec.base)) {
    const QuadraticProgram& qp = std::get<QuadraticProgram>(spec.base);
    Hs = 0.5 * (qp.H + qp.H.transpose());
    if (Hs.cwiseAbs().maxCoeff() > 0.0) {
      Eigen::SelfAdjointEigenSolver<Mat> eig(Hs, Eigen::EigenvaluesOnly);
      if (eig.eigenvalues().minCoeff() < -1e-8)
        fail(ErrorCode::NonConvex, "quadratic term has a negative eigenvalue");
    }
    hp = &Hs;
  }
  const IpmProblem base = to_problem(lin, hp);

  if (spec.integer_vars.empty()) return solve_continuous(base);

  std::vector<int> ints = spec.integer_vars;
  std::sort(ints.begin(), ints.end());

  Vec lo0 = base.lo, hi0 = base.hi;
  for (int v : ints) {
    if (!std::isfinite(lo0[v]) || !std::isfinite(hi0[v]))
      fail(ErrorCode::InvalidSpec, "integer variables need finite bounds");
    lo0[v] = std::ceil(lo0[v] - kIntegralityTol);
    hi0[v] = std::floor(hi0[v] + kIntegralityTol);
    if (lo0[v] > hi0[v]) return infeasible_result(true);
  }

  std::priority_queue<BranchNode, std::vector<BranchNode>, NodeOrder> queue;
  long next_id = 0;
  queue.push(BranchNode{lo0, hi0, -kInf, next_id++});

  SolveResult best;
  bool have_incumbent = false;
  double incumbent = kInf;
  double lost_bound = kInf;  // bounds of nodes dropped without a certificate
  long nodes = 0;
  int iterations = 0;

  auto try_incumbent = [&](const Vec& lo, const Vec& hi, const Vec& zrelax) {
    Vec flo = lo, fhi = hi;
    for (int v : ints) {
      const double k = std::round(zrelax[v]);
      if (k < lo[v] - 0.5 || k > hi[v] + 0.5) return;
      flo[v] = fhi[v] = k;
    }
    SolveResult sub = solve_node(base, flo, fhi);
    iterations += sub.iterations;
    if (sub.z.size() == 0) return;
    if (sub.status != SolveStatus::Optimal &&
        sub.status != SolveStatus::ToleranceReached)
      return;
    IpmProblem chk = base;
    chk.lo = flo;
    chk.hi = fhi;
    if (!point_feasible(chk, sub.z, 1e-6)) return;
    if (sub.objective < incumbent) {
      incumbent = sub.objective;
      best.z = sub.z;
      best.objective = sub.objective;
      have_incumbent = true;
    }
  };

  SolveStatus final_status = SolveStatus::Optimal;
  double exit_bound = kInf;  // bound carried by the queue when we stop early

  while (!queue.empty()) {
    BranchNode node = queue.top();
    queue.pop();
    if (node.bound >= incumbent - kMipGap) {
      exit_bound = node.bound;
      break;  // best-first order: every remaining node is at least this bound
    }
    if (++nodes > kMipNodeLimit) {
      final_status = SolveStatus::ToleranceReached;
      exit_bound = node.bound;
      break;
    }

    SolveResult rel = solve_node(base, node.lo, node.hi);
    iterations += rel.iterations;
    if (rel.status == SolveStatus::Infeasible) {
      if (rel.certified_lower_bound < kInf)
        lost_bound = std::min(lost_bound, node.bound);
      continue;
    }
    if (rel.status == SolveStatus::Unbounded) {
      SolveResult r;
      r.status = SolveStatus::Unbounded;
      r.objective = -kInf;
      r.certified_lower_bound = -kInf;
      r.gap = 0.0;
      r.nodes = nodes;
      r.iterations = iterations;
      return r;
    }
    const double bound = std::max(node.bound, rel.certified_lower_bound);
    if (bound >= incumbent - kMipGap) continue;

    if (rel.z.size() == 0) {
      lost_bound = std::min(lost_bound, bound);
      continue;
    }

    // pick the integer variable furthest from a whole value
    int branch_var = -1;
    double best_frac_dist = kIntegralityTol;
    for (int v : ints) {
      const double frac = rel.z[v] - std::floor(rel.z[v]);
      const double dist = std::min(frac, 1.0 - frac);
      if (dist > best_frac_dist) {
        best_frac_dist = dist;
        branch_var = v;
      }
    }

    if (branch_var < 0) {
      // relaxation already integral: fix and polish
      try_incumbent(node.lo, node.hi, rel.z);
      if (bound >= incumbent - kMipGap) continue;
      // the snapped value left a gap; split the widest open integer box
      int widest = -1;
      double width = 0.5;
      for (int v : ints)
        if (node.hi[v] - node.lo[v] > width) {
          width = node.hi[v] - node.lo[v];
          widest = v;
        }
      if (widest < 0) {
        lost_bound = std::min(lost_bound, bound);
        continue;
      }
      const double mid = std::floor(0.5 * (node.lo[widest] + node.hi[widest]));
      BranchNode left{node.lo, node.hi, bound, next_id++};
      left.hi[widest] = mid;
      BranchNode right{node.lo, node.hi, bound, next_id++};
      right.lo[widest] = mid + 1.0;
      queue.push(std::move(left));
      queue.push(std::move(right));
      continue;
    }

    try_incumbent(node.lo, node.hi, rel.z);
    const double split = std::clamp(std::floor(rel.z[branch_var]),
                                    node.lo[branch_var],
                                    node.hi[branch_var] - 1.0);
    BranchNode left{node.lo, node.hi, bound, next_id++};
    left.hi[branch_var] = split;
    BranchNode right{node.lo, node.hi, bound, next_id++};
    right.lo[branch_var] = split + 1.0;
    queue.push(std::move(left));
    queue.push(std::move(right));
  }

  best.nodes = nodes;
  best.iterations = iterations;
  if (have_incumbent) {
    best.status = final_status;
    best.certified_lower_bound =
        std::min({incumbent - kMipGap, lost_bound, exit_bound});
    best.gap = best.objective - best.certified_lower_bound;
    return best;
  }
  if (final_status == SolveStatus::ToleranceReached || lost_bound < kInf) {
    best.status = SolveStatus::ToleranceReached;
    best.objective = kInf;
    best.certified_lower_bound = std::min(lost_bound, exit_bound);
    best.gap = kInf;
    return best;
  }
  SolveResult r = infeasible_result(true);
  r.nodes = nodes;
  r.iterations = iterations;
  return r;
}

}  // namespace fairver
