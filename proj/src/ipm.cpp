#include "ipm.hpp"

#include <algorithm>
#include <cmath>

namespace fairver::detail {

namespace {

// All inequality material (caller rows first, then finite box sides) as a
// single block A z <= b.
struct Stacked {
  Mat A;
  Vec b;
  int general = 0;
};

Stacked stack_rows(const IpmProblem& p) {
  const int n = p.nvars();
  const int mg = static_cast<int>(p.G.rows());
  int nbox = 0;
  for (int i = 0; i < n; ++i) {
    if (std::isfinite(p.hi[i])) ++nbox;
    if (std::isfinite(p.lo[i])) ++nbox;
  }
  Stacked s;
  s.general = mg;
  s.A = Mat::Zero(mg + nbox, n);
  s.b = Vec::Zero(mg + nbox);
  if (mg > 0) {
    s.A.topRows(mg) = p.G;
    s.b.head(mg) = p.h;
  }
  int r = mg;
  for (int i = 0; i < n; ++i) {
    if (std::isfinite(p.hi[i])) {
      s.A(r, i) = 1.0;
      s.b[r] = p.hi[i];
      ++r;
    }
    if (std::isfinite(p.lo[i])) {
      s.A(r, i) = -1.0;
      s.b[r] = -p.lo[i];
      ++r;
    }
  }
  return s;
}

Vec starting_point(const IpmProblem& p) {
  const int n = p.nvars();
  Vec z(n);
  for (int i = 0; i < n; ++i) {
    const bool lo_f = std::isfinite(p.lo[i]);
    const bool hi_f = std::isfinite(p.hi[i]);
    if (lo_f && hi_f)
      z[i] = 0.5 * (p.lo[i] + p.hi[i]);
    else if (lo_f)
      z[i] = p.lo[i] + 1.0;
    else if (hi_f)
      z[i] = p.hi[i] - 1.0;
    else
      z[i] = 0.0;
  }
  return z;
}

double step_length(const Vec& v, const Vec& dv, double tau) {
  double alpha = 1.0;
  for (long i = 0; i < v.size(); ++i)
    if (dv[i] < 0.0) alpha = std::min(alpha, -tau * v[i] / dv[i]);
  return alpha;
}

// Equality-constrained (or unconstrained) problems bypass the barrier loop.
IpmOutcome solve_without_inequalities(const IpmProblem& p) {
  const int n = p.nvars();
  const int me = static_cast<int>(p.E.rows());
  Mat K = Mat::Zero(n + me, n + me);
  if (p.has_quadratic()) K.topLeftCorner(n, n) = p.H;
  if (me > 0) {
    K.topRightCorner(n, me) = p.E.transpose();
    K.bottomLeftCorner(me, n) = p.E;
  }
  Vec rhs(n + me);
  rhs.head(n) = -p.c;
  if (me > 0) rhs.tail(me) = p.e;

  IpmOutcome out;
  Eigen::FullPivLU<Mat> lu(K);
  Vec sol = lu.solve(rhs);
  out.z = sol.head(n);
  out.lambda = Vec::Zero(0);
  out.nu = me > 0 ? Vec(sol.tail(me)) : Vec::Zero(0);
  const Vec hz = p.has_quadratic() ? Vec(p.H * out.z) : Vec(Vec::Zero(n));
  out.objective = 0.5 * out.z.dot(hz) + p.c.dot(out.z);
  Vec rd = hz + p.c;
  if (me > 0) rd += p.E.transpose() * out.nu;
  out.dual_residual = rd.lpNorm<Eigen::Infinity>();
  out.primal_residual = me > 0 ? (p.E * out.z - p.e).lpNorm<Eigen::Infinity>() : 0.0;
  out.mu = 0.0;
  out.converged = out.dual_residual <= 1e-8 * (1.0 + p.c.lpNorm<Eigen::Infinity>()) &&
                  out.primal_residual <= 1e-8;
  out.certified_lower_bound = certified_bound(p, out.z, out.lambda, out.nu);
  return out;
}

}  // namespace

IpmOutcome ipm_solve(const IpmProblem& p, int max_iters) {
  const int n = p.nvars();
  const int me = static_cast<int>(p.E.rows());
  const Stacked st = stack_rows(p);
  const int m = static_cast<int>(st.A.rows());
  if (m == 0) return solve_without_inequalities(p);

  Vec z = starting_point(p);
  Vec s(m), lambda = Vec::Ones(m);
  {
    const Vec slack = st.b - st.A * z;
    for (int i = 0; i < m; ++i) s[i] = std::max(slack[i], 1.0);
  }
  Vec nu = Vec::Zero(me);

  const double bnorm = 1.0 + st.b.lpNorm<Eigen::Infinity>() +
                       (me > 0 ? p.e.lpNorm<Eigen::Infinity>() : 0.0);
  const double cnorm = 1.0 + p.c.lpNorm<Eigen::Infinity>();

  IpmOutcome out;
  Vec best_z = z, best_lambda = lambda, best_nu = nu;
  double best_score = kInf;

  for (int iter = 0; iter < max_iters; ++iter) {
    const Vec hz = p.has_quadratic() ? Vec(p.H * z) : Vec(Vec::Zero(n));
    Vec rd = hz + p.c + st.A.transpose() * lambda;
    if (me > 0) rd += p.E.transpose() * nu;
    const Vec rp = st.A * z + s - st.b;
    const Vec re = me > 0 ? Vec(p.E * z - p.e) : Vec(Vec::Zero(0));
    const double mu = s.dot(lambda) / m;
    const double obj = 0.5 * z.dot(hz) + p.c.dot(z);

    const double pr = std::max(rp.lpNorm<Eigen::Infinity>() / bnorm,
                               me > 0 ? re.lpNorm<Eigen::Infinity>() / bnorm : 0.0);
    const double dr = rd.lpNorm<Eigen::Infinity>() / cnorm;
    const double cg = mu / (1.0 + std::abs(obj));

    const double score = pr + dr + cg;
    if (score < best_score) {
      best_score = score;
      best_z = z;
      best_lambda = lambda;
      best_nu = nu;
    }
    out.iterations = iter;
    out.primal_residual = pr;
    out.dual_residual = dr;
    out.mu = mu;
    if (pr <= 1e-9 && dr <= 1e-9 && cg <= 1e-11) {
      out.converged = true;
      break;
    }
    if (z.lpNorm<Eigen::Infinity>() > 1e12 ||
        lambda.lpNorm<Eigen::Infinity>() > 1e14)
      break;  // diverging; caller sorts out infeasible vs unbounded

    // shared coefficient matrix for predictor and corrector
    const Vec d = (lambda.array() / s.array()).matrix();
    Mat M = st.A.transpose() * d.asDiagonal() * st.A;
    if (p.has_quadratic()) M += p.H;
    Mat K = Mat::Zero(n + me, n + me);
    K.topLeftCorner(n, n) = M;
    if (me > 0) {
      K.topRightCorner(n, me) = p.E.transpose();
      K.bottomLeftCorner(me, n) = p.E;
    }

    Eigen::FullPivLU<Mat> lu(K);
    double ridge = 1e-12 * (1.0 + K.cwiseAbs().maxCoeff());
    for (int attempt = 0; attempt < 4 && !lu.isInvertible(); ++attempt) {
      Mat Kr = K;
      Kr.topLeftCorner(n, n).diagonal().array() += ridge;
      if (me > 0) Kr.bottomRightCorner(me, me).diagonal().array() -= ridge;
      lu.compute(Kr);
      ridge *= 1e3;
    }

    auto newton = [&](const Vec& rc, Vec& dz, Vec& ds, Vec& dl, Vec& dn) {
      Vec rhs(n + me);
      rhs.head(n) = -rd - st.A.transpose() *
                              ((rc.array() + lambda.array() * rp.array()) / s.array()).matrix();
      if (me > 0) rhs.tail(me) = -re;
      const Vec sol = lu.solve(rhs);
      dz = sol.head(n);
      dn = me > 0 ? Vec(sol.tail(me)) : Vec(Vec::Zero(0));
      ds = -rp - st.A * dz;
      dl = ((rc.array() - lambda.array() * ds.array()) / s.array()).matrix();
    };

    // predictor
    Vec dz, ds, dl, dn;
    const Vec rc_aff = (-(s.array() * lambda.array())).matrix();
    newton(rc_aff, dz, ds, dl, dn);
    const double ap_aff = step_length(s, ds, 1.0);
    const double ad_aff = step_length(lambda, dl, 1.0);
    const double mu_aff =
        (s + ap_aff * ds).dot(lambda + ad_aff * dl) / m;
    double sigma = mu > 0 ? std::pow(mu_aff / mu, 3) : 0.0;
    sigma = std::clamp(sigma, 1e-8, 1.0);

    // corrector with second-order term
    const Vec rc = (sigma * mu - (s.array() * lambda.array()) -
                    (ds.array() * dl.array()))
                       .matrix();
    newton(rc, dz, ds, dl, dn);

    const double tau = 0.995;
    const double ap = step_length(s, ds, tau);
    const double ad = step_length(lambda, dl, tau);
    if (ap < 1e-12 && ad < 1e-12) break;  // stalled

    z += ap * dz;
    s += ap * ds;
    lambda += ad * dl;
    if (me > 0) nu += ad * dn;
  }

  if (!out.converged) {
    z = best_z;
    lambda = best_lambda;
    nu = best_nu;
  }
  out.z = z;
  out.lambda = st.general > 0 ? Vec(lambda.head(st.general)) : Vec(Vec::Zero(0));
  out.nu = nu;
  const Vec hz = p.has_quadratic() ? Vec(p.H * z) : Vec(Vec::Zero(n));
  out.objective = 0.5 * z.dot(hz) + p.c.dot(z);
  out.certified_lower_bound = certified_bound(p, z, out.lambda, out.nu);
  return out;
}

double certified_bound(const IpmProblem& p, const Vec& z, const Vec& lambda,
                       const Vec& nu) {
  const int n = p.nvars();
  Vec lam = lambda.cwiseMax(0.0);
  Vec r = p.c;
  if (p.has_quadratic()) r += p.H * z;
  if (p.G.rows() > 0) r += p.G.transpose() * lam;
  if (p.E.rows() > 0) r += p.E.transpose() * nu;

  double bound = 0.0;
  for (int i = 0; i < n; ++i) {
    if (r[i] == 0.0) continue;
    const double side = r[i] > 0.0 ? p.lo[i] : p.hi[i];
    if (!std::isfinite(side)) return -kInf;
    bound += r[i] * side;
  }
  if (p.has_quadratic()) bound -= 0.5 * z.dot(p.H * z);
  if (p.G.rows() > 0) bound -= p.h.dot(lam);
  if (p.E.rows() > 0) bound -= p.e.dot(nu);
  return bound;
}

}  // namespace fairver::detail
