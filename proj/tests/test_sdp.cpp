#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include <fairver/rng.hpp>
#include <fairver/sdp.hpp>

#include "test_util.hpp"

using namespace fairver;
using testutil::vec;

namespace {

SdpProblem scalar_problem() {
  SdpProblem p;
  p.block_sizes = {1};
  p.objective = {Mat::Constant(1, 1, 1.0)};
  p.rhs = Vec::Zero(0);
  return p;
}

}  // namespace

TEST_CASE("scalar problem with no rows settles at zero") {
  SdpResult r = solve_sdp(scalar_problem());
  REQUIRE(r.status == SolveStatus::Optimal);
  CHECK(r.objective == 0.0);
  CHECK(r.min_eigenvalue >= -1e-8);
}

TEST_CASE("negative scalar objective with no rows is unbounded") {
  SdpProblem p = scalar_problem();
  p.objective[0](0, 0) = -1.0;
  SdpResult r = solve_sdp(p);
  CHECK(r.status == SolveStatus::Unbounded);
}

TEST_CASE("trace minimization with a fixed off-diagonal entry") {
  // min tr(X) s.t. X_01 = 1, X psd has optimum 2 at the all-ones matrix
  SdpProblem p;
  p.block_sizes = {2};
  p.objective = {Mat::Identity(2, 2)};
  Mat a = Mat::Zero(2, 2);
  a(0, 1) = a(1, 0) = 0.5;
  p.constraints = {{a}};
  p.rhs = vec({1.0});
  SdpResult r = solve_sdp(p);
  REQUIRE(r.status == SolveStatus::Optimal);
  CHECK(r.objective == doctest::Approx(-2.0).epsilon(1e-7));
  CHECK(r.Z[0](0, 0) == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(r.Z[0](0, 1) == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(r.Z[0](1, 1) == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(r.min_eigenvalue >= -1e-8);
  CHECK(r.primal_residual <= 1e-7);
  CHECK(r.dual_residual <= 1e-7);

  SdpResult again = solve_sdp(p);
  CHECK(again.objective == r.objective);
}

TEST_CASE("several blocks solve jointly") {
  SdpProblem p;
  p.block_sizes = {2, 1};
  p.objective = {Mat::Identity(2, 2), Mat::Constant(1, 1, 1.0)};
  Mat a = Mat::Zero(2, 2);
  a(0, 1) = a(1, 0) = 0.5;
  p.constraints.push_back({a, Mat::Zero(1, 1)});
  p.constraints.push_back({Mat::Zero(2, 2), Mat::Constant(1, 1, 1.0)});
  p.rhs = vec({1.0, 2.0});
  SdpResult r = solve_sdp(p);
  REQUIRE(r.status == SolveStatus::Optimal);
  CHECK(r.objective == doctest::Approx(-4.0).epsilon(1e-7));
  CHECK(r.Z[1](0, 0) == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(r.min_eigenvalue >= -1e-8);
}

TEST_CASE("diagonal problems agree with the linear solver") {
  Rng rng(900913);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 3 + int(rng.integer(0, 2));
    const int rows = 1 + int(rng.integer(0, 2));

    Vec c(n), xstar(n);
    for (int i = 0; i < n; ++i) {
      c[i] = rng.real(0.1, 2.0);
      xstar[i] = rng.real(0.2, 1.5);
    }
    Mat A(rows, n);
    for (int k = 0; k < rows; ++k)
      for (int i = 0; i < n; ++i) A(k, i) = rng.real(-1.0, 1.0);
    const Vec b = A * xstar;  // keeps the system solvable with x > 0

    SdpProblem p;
    p.block_sizes = {n};
    p.objective = {Mat(c.asDiagonal())};
    for (int k = 0; k < rows; ++k)
      p.constraints.push_back({Mat(Vec(A.row(k)).asDiagonal())});
    p.rhs = b;
    SdpResult sr = solve_sdp(p);

    LinearProgram lp = LinearProgram::make(n);
    lp.c = c;
    lp.lo = Vec::Zero(n);
    for (int k = 0; k < rows; ++k) lp.add_equality(A.row(k), b[k]);
    SolveResult lr = solve_lp(lp);

    REQUIRE(sr.status == SolveStatus::Optimal);
    REQUIRE(lr.status == SolveStatus::Optimal);
    CHECK(std::abs(sr.objective - (-lr.objective)) <= 1e-6 * (1.0 + std::abs(lr.objective)));
    CHECK(sr.min_eigenvalue >= -1e-8);
  }
}

TEST_CASE("an impossible diagonal requirement is flagged infeasible") {
  SdpProblem p;
  p.block_sizes = {2};
  p.objective = {Mat::Identity(2, 2)};
  Mat a = Mat::Zero(2, 2);
  a(0, 0) = 1.0;
  p.constraints = {{a}};
  p.rhs = vec({-1.0});
  SdpResult r = solve_sdp(p);
  CHECK(r.status == SolveStatus::Infeasible);
}

TEST_CASE("malformed problems are rejected") {
  SdpProblem p;
  p.block_sizes = {2};
  Mat bad(2, 2);
  bad << 0.0, 1.0, 0.0, 0.0;
  p.objective = {bad};
  p.rhs = Vec::Zero(0);
  CHECK_THROWS_AS(solve_sdp(p), Error);

  SdpProblem q;
  q.block_sizes = {2};
  q.objective = {Mat::Identity(2, 2)};
  q.constraints = {{Mat::Identity(2, 2)}};
  q.rhs = Vec::Zero(0);  // count mismatch
  CHECK_THROWS_AS(solve_sdp(q), Error);
}
