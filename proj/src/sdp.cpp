#include <fairver/sdp.hpp>

#include <algorithm>
#include <cmath>

namespace fairver {

namespace {

Mat sym(const Mat& m) { return 0.5 * (m + m.transpose()); }

double dot(const std::vector<Mat>& a, const std::vector<Mat>& b) {
  double v = 0.0;
  for (size_t i = 0; i < a.size(); ++i) v += a[i].cwiseProduct(b[i]).sum();
  return v;
}

// largest alpha in (0, 1] with V + alpha D still positive definite,
// shrunk by tau
double psd_step(const std::vector<Eigen::LLT<Mat>>& chol,
                const std::vector<Mat>& D, double tau) {
  double alpha = 1.0;
  for (size_t b = 0; b < D.size(); ++b) {
    const Mat& L = chol[b].matrixL();
    Mat W = L.triangularView<Eigen::Lower>().solve(D[b]);
    W = L.triangularView<Eigen::Lower>().solve(Mat(W.transpose())).transpose();
    Eigen::SelfAdjointEigenSolver<Mat> eig(sym(W), Eigen::EigenvaluesOnly);
    const double lmin = eig.eigenvalues().minCoeff();
    if (lmin < -1e-14) alpha = std::min(alpha, -tau / lmin);
  }
  return alpha;
}

double min_eig(const std::vector<Mat>& blocks) {
  double v = kInf;
  for (const Mat& m : blocks) {
    Eigen::SelfAdjointEigenSolver<Mat> eig(sym(m), Eigen::EigenvaluesOnly);
    v = std::min(v, eig.eigenvalues().minCoeff());
  }
  return v;
}

}  // namespace

void SdpProblem::validate() const {
  if (block_sizes.empty()) fail(ErrorCode::InvalidSpec, "sdp needs at least one block");
  for (int s : block_sizes)
    if (s < 1) fail(ErrorCode::InvalidSpec, "sdp block sizes must be positive");
  auto check_blocks = [&](const std::vector<Mat>& mats, const char* what) {
    if (mats.size() != block_sizes.size())
      fail(ErrorCode::DimensionMismatch, std::string(what) + " block count mismatch");
    for (size_t b = 0; b < mats.size(); ++b) {
      if (mats[b].rows() != block_sizes[b] || mats[b].cols() != block_sizes[b])
        fail(ErrorCode::DimensionMismatch, std::string(what) + " block shape mismatch");
      if (!mats[b].allFinite())
        fail(ErrorCode::InvalidSpec, std::string(what) + " has non-finite entries");
      if ((mats[b] - mats[b].transpose()).cwiseAbs().maxCoeff() >
          1e-9 * (1.0 + mats[b].cwiseAbs().maxCoeff()))
        fail(ErrorCode::InvalidSpec, std::string(what) + " block not symmetric");
    }
  };
  check_blocks(objective, "objective");
  if (static_cast<int>(constraints.size()) != nconstraints())
    fail(ErrorCode::DimensionMismatch, "constraint count does not match rhs length");
  for (const auto& ak : constraints) check_blocks(ak, "constraint");
  for (long k = 0; k < rhs.size(); ++k)
    if (!std::isfinite(rhs[k])) fail(ErrorCode::InvalidSpec, "rhs has non-finite entries");
}

SdpResult solve_sdp(const SdpProblem& p) {
  p.validate();
  const int nb = static_cast<int>(p.block_sizes.size());
  const int K = p.nconstraints();
  int total_dim = 0;
  for (int s : p.block_sizes) total_dim += s;

  SdpResult res;

  if (K == 0) {
    // min A0 . X over the psd cone alone: zero if A0 is psd, unbounded below
    // in the maximize sense otherwise
    res.Z.resize(nb);
    for (int b = 0; b < nb; ++b) res.Z[b] = Mat::Zero(p.block_sizes[b], p.block_sizes[b]);
    res.y = Vec::Zero(0);
    if (min_eig(p.objective) >= -1e-12) {
      res.status = SolveStatus::Optimal;
      res.objective = 0.0;
      res.dual_objective = 0.0;
      res.gap = 0.0;
      res.primal_residual = 0.0;
      res.dual_residual = 0.0;
    } else {
      res.status = SolveStatus::Unbounded;
      res.objective = kInf;
    }
    return res;
  }

  double scale = 1.0 + p.rhs.lpNorm<Eigen::Infinity>();
  for (int b = 0; b < nb; ++b) scale = std::max(scale, p.objective[b].cwiseAbs().maxCoeff());
  for (int k = 0; k < K; ++k)
    for (int b = 0; b < nb; ++b)
      scale = std::max(scale, p.constraints[k][b].cwiseAbs().maxCoeff());

  std::vector<Mat> X(nb), S(nb);
  for (int b = 0; b < nb; ++b) {
    X[b] = scale * Mat::Identity(p.block_sizes[b], p.block_sizes[b]);
    S[b] = scale * Mat::Identity(p.block_sizes[b], p.block_sizes[b]);
  }
  Vec y = Vec::Zero(K);

  const double bnorm = 1.0 + p.rhs.lpNorm<Eigen::Infinity>();
  double cmax = 1.0;
  for (int b = 0; b < nb; ++b) cmax = std::max(cmax, p.objective[b].cwiseAbs().maxCoeff());

  std::vector<Mat> Rd(nb), Sinv(nb), dX(nb), dS(nb), R(nb);
  std::vector<Eigen::LLT<Mat>> cholS(nb), cholX(nb);
  const int max_iters = 100;

  for (int iter = 0; iter < max_iters; ++iter) {
    Vec rp(K);
    for (int k = 0; k < K; ++k) rp[k] = p.rhs[k] - dot(p.constraints[k], X);
    for (int b = 0; b < nb; ++b) {
      Rd[b] = p.objective[b] - S[b];
      for (int k = 0; k < K; ++k) Rd[b] -= y[k] * p.constraints[k][b];
    }
    double mu = 0.0;
    for (int b = 0; b < nb; ++b) mu += X[b].cwiseProduct(S[b]).sum();
    mu /= total_dim;

    const double pobj = dot(p.objective, X);   // internal minimization value
    const double dobj = p.rhs.dot(y);
    double rdmax = 0.0;
    for (int b = 0; b < nb; ++b) rdmax = std::max(rdmax, Rd[b].cwiseAbs().maxCoeff());

    res.iterations = iter;
    res.primal_residual = rp.lpNorm<Eigen::Infinity>();
    res.dual_residual = rdmax;
    res.gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));

    if (res.primal_residual <= 1e-8 * bnorm && rdmax <= 1e-8 * cmax &&
        res.gap <= 1e-9) {
      res.status = SolveStatus::Optimal;
      break;
    }
    if (y.lpNorm<Eigen::Infinity>() > 1e10 * scale) {
      res.status = SolveStatus::Infeasible;
      break;
    }

    bool chol_ok = true;
    for (int b = 0; b < nb; ++b) {
      cholS[b].compute(S[b]);
      cholX[b].compute(X[b]);
      if (cholS[b].info() != Eigen::Success || cholX[b].info() != Eigen::Success)
        chol_ok = false;
    }
    if (!chol_ok) break;  // iterate left the cone numerically; report best so far

    for (int b = 0; b < nb; ++b) {
      const int s = p.block_sizes[b];
      Sinv[b] = cholS[b].solve(Mat::Identity(s, s));
    }

    // Schur complement M_jk = tr(Aj X Ak S^-1), assembled via T_k = X Ak S^-1
    std::vector<std::vector<Mat>> T(K);
    for (int k = 0; k < K; ++k) {
      T[k].resize(nb);
      for (int b = 0; b < nb; ++b) T[k][b] = X[b] * p.constraints[k][b] * Sinv[b];
    }
    Mat M(K, K);
    for (int j = 0; j < K; ++j)
      for (int k = 0; k < K; ++k) M(j, k) = dot(p.constraints[j], T[k]);
    M = sym(M);
    M.diagonal().array() += 1e-13 * (1.0 + M.diagonal().cwiseAbs().maxCoeff());
    Eigen::LLT<Mat> mf(M);
    Eigen::FullPivLU<Mat> mlu;
    const bool use_llt = mf.info() == Eigen::Success;
    if (!use_llt) mlu.compute(M);

    auto direction = [&](double sigma_mu, const std::vector<Mat>* second,
                         Vec& dy) {
      for (int b = 0; b < nb; ++b) {
        R[b] = sigma_mu * Sinv[b] - X[b];
        if (second != nullptr) R[b] -= (*second)[b];
      }
      Vec rhs(K);
      for (int j = 0; j < K; ++j) {
        double t = rp[j];
        for (int b = 0; b < nb; ++b) {
          const Mat tmp = R[b] - X[b] * Rd[b] * Sinv[b];
          t -= p.constraints[j][b].cwiseProduct(tmp).sum();
        }
        rhs[j] = t;
      }
      dy = use_llt ? Vec(mf.solve(rhs)) : Vec(mlu.solve(rhs));
      for (int b = 0; b < nb; ++b) {
        dS[b] = Rd[b];
        for (int k = 0; k < K; ++k) dS[b] -= dy[k] * p.constraints[k][b];
        dS[b] = sym(dS[b]);
        dX[b] = sym(R[b] - X[b] * dS[b] * Sinv[b]);
      }
    };

    // predictor
    Vec dy;
    direction(0.0, nullptr, dy);
    const double apa = psd_step(cholX, dX, 1.0);
    const double ada = psd_step(cholS, dS, 1.0);
    double mu_aff = 0.0;
    for (int b = 0; b < nb; ++b)
      mu_aff += (X[b] + apa * dX[b]).cwiseProduct(S[b] + ada * dS[b]).sum();
    mu_aff /= total_dim;
    double sigma = std::pow(std::max(mu_aff, 0.0) / mu, 3);
    sigma = std::clamp(sigma, 1e-8, 1.0);

    // corrector reuses the factorization with the second-order term
    std::vector<Mat> second(nb);
    for (int b = 0; b < nb; ++b) second[b] = dX[b] * dS[b] * Sinv[b];
    direction(sigma * mu, &second, dy);

    const double tau = 0.98;
    const double ap = psd_step(cholX, dX, tau);
    const double ad = psd_step(cholS, dS, tau);
    if (ap < 1e-12 && ad < 1e-12) break;

    for (int b = 0; b < nb; ++b) {
      X[b] += ap * dX[b];
      S[b] += ad * dS[b];
    }
    y += ad * dy;
  }

  res.Z = X;
  res.y = y;
  res.objective = -dot(p.objective, X);
  res.dual_objective = -p.rhs.dot(y);
  res.min_eigenvalue = min_eig(X);
  return res;
}

}  // namespace fairver
