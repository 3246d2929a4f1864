#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <vector>

#include <json.hpp>

#include <fairver/baseline.hpp>
#include <fairver/convex_solvers.hpp>
#include <fairver/rng.hpp>
#include <fairver/runner.hpp>
#include <fairver/scenario.hpp>
#include <fairver/sos.hpp>

#include "test_util.hpp"

// Release gate: every criterion below prints one pass/fail line. Tolerances
// are pinned here, not read from anywhere else.

using namespace fairver;
using Clock = std::chrono::steady_clock;
using testutil::per_feature_blocks;
using testutil::vec;

namespace {

constexpr int kLinearTaskCount = 200;        // half regression, half classification
constexpr double kLinearBudgetSeconds = 120.0;
constexpr int kSosTaskCount = 50;
constexpr double kSosSlack = 1e-6;           // bound may exceed the sampled min by this
constexpr double kSosBudgetSeconds = 600.0;
constexpr int kTightnessCount = 20;
constexpr double kTightnessTol = 1e-5;
constexpr long kClosePairProbes = 1000000;   // per certified rbf outcome
constexpr int kMaskingSeeds = 10;
constexpr long kTesterBudget = 50000;
constexpr long kTesterFastBudget = 5000;
constexpr double kRadiusTol = 1e-9;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void report_line(int criterion, const char* name, bool ok, const std::string& detail) {
  std::printf("[%s] criterion %d: %s (%s)\n", ok ? "PASS" : "FAIL", criterion, name,
              detail.c_str());
  std::fflush(stdout);
}

FeatureDomain discrete_domain(double hi) { return {0.0, hi, FeatureKind::Discrete}; }

VerificationTask random_discrete_task(Rng& rng, TaskMode mode) {
  const int n = static_cast<int>(rng.integer(2, 4));
  VerificationTask task;
  Vec w(n);
  std::vector<Threshold> ts;
  for (int i = 0; i < n; ++i) {
    task.domains.push_back(discrete_domain(static_cast<double>(rng.integer(1, 3))));
    w[i] = rng.real(-1.0, 1.0);
    const long kind = rng.integer(0, 2);
    ts.push_back(kind == 0 ? Threshold::unlimited()
                           : (kind == 1 ? Threshold::finite(static_cast<double>(rng.integer(1, 2)))
                                        : Threshold::finite(0.0)));
  }
  task.model = LinearModel{w, rng.real(-0.5, 0.5)};
  task.mode = mode;
  double delta = 0.0;
  if (mode == TaskMode::Regression) {
    delta = rng.real(0.05, 1.5);
    task.spec = per_feature_blocks(ts, 0.0);
    const double edge = brute_force_oracle(task, 1).min_gap;
    if (std::abs(-delta - edge) < 1e-3) delta += 2e-3;  // stay off the threshold knife edge
  }
  task.spec = per_feature_blocks(ts, delta);
  return task;
}

Polynomial random_box_poly(Rng& rng, int nvars, int degree) {
  const auto basis = enumerate_basis(nvars, degree);
  Polynomial p = Polynomial::constant(nvars, 0.0);
  for (const auto& alpha : basis.elements) {
    if (rng.real(0.0, 1.0) < 0.45) continue;
    p.add_term(alpha, rng.real(-1.0, 1.0));
  }
  MultiIndex lin(static_cast<size_t>(nvars), 0);
  lin[0] = 1;
  p.add_term(lin, rng.real(0.25, 1.0));  // never degenerate to a constant
  return p;
}

double sampled_min(const Polynomial& p, const Vec& lo, const Vec& hi, Rng& rng) {
  const int v = static_cast<int>(lo.size());
  const int g = v <= 2 ? 41 : (v == 3 ? 13 : 5);
  double best = kInf;
  std::vector<int> idx(static_cast<size_t>(v), 0);
  Vec x(v);
  while (true) {
    for (int i = 0; i < v; ++i)
      x[i] = lo[i] + (hi[i] - lo[i]) * static_cast<double>(idx[static_cast<size_t>(i)]) /
                         static_cast<double>(g - 1);
    best = std::min(best, p.evaluate(x));
    int i = 0;
    while (i < v && ++idx[static_cast<size_t>(i)] == g) idx[static_cast<size_t>(i++)] = 0;
    if (i == v) break;
  }
  for (int s = 0; s < 4000 * v; ++s) {
    for (int i = 0; i < v; ++i) x[i] = rng.real(lo[i], hi[i]);
    best = std::min(best, p.evaluate(x));
  }
  return best;
}

Vec sample_valid_point(Rng& rng, const std::vector<FeatureDomain>& ds) {
  Vec x(static_cast<Eigen::Index>(ds.size()));
  for (size_t i = 0; i < ds.size(); ++i) {
    const auto& d = ds[i];
    x[static_cast<Eigen::Index>(i)] =
        d.is_discrete() ? d.lower + static_cast<double>(rng.integer(0, d.value_count() - 1))
                        : rng.real(d.lower, d.upper);
  }
  return x;
}

std::pair<Vec, Vec> random_close_pair(Rng& rng, const VerificationTask& task) {
  const int n = feature_count(task.model);
  const auto thr = task.spec.per_feature(n);
  Vec x = sample_valid_point(rng, task.domains);
  Vec xp = x;
  for (int i = 0; i < n; ++i) {
    const auto& d = task.domains[static_cast<size_t>(i)];
    if (thr[static_cast<size_t>(i)].is_unlimited()) {
      xp[i] = d.is_discrete() ? d.lower + static_cast<double>(rng.integer(0, d.value_count() - 1))
                              : rng.real(d.lower, d.upper);
    } else if (!thr[static_cast<size_t>(i)].is_zero()) {
      const double e = thr[static_cast<size_t>(i)].value();
      const double lo = std::max(d.lower, x[i] - e);
      const double hi = std::min(d.upper, x[i] + e);
      xp[i] = d.is_discrete() ? std::round(rng.real(lo, hi)) : rng.real(lo, hi);
      xp[i] = std::min(std::max(xp[i], d.lower), d.upper);
    }
  }
  return {x, xp};
}

}  // namespace

TEST_CASE("criterion 1") {
  const auto t0 = Clock::now();
  Rng rng(20201);
  int agree = 0, total = 0;
  for (int trial = 0; trial < kLinearTaskCount; ++trial) {
    const TaskMode mode = trial % 2 == 0 ? TaskMode::Regression : TaskMode::Classification;
    auto task = random_discrete_task(rng, mode);
    const auto oracle = brute_force_oracle(task, 1);
    const auto out = mode == TaskMode::Regression ? verify_linear_regression(task)
                                                  : verify_linear_classifier(task);
    ++total;
    const bool match = (out.verdict.is_biased() && oracle.bias_found) ||
                       (out.verdict.is_no_bias() && !oracle.bias_found);
    if (match) ++agree;
  }
  const double elapsed = seconds_since(t0);
  const bool ok = agree == total && total == kLinearTaskCount && elapsed < kLinearBudgetSeconds;
  char detail[128];
  std::snprintf(detail, sizeof detail, "%d/%d verdicts agree with enumeration, %.1fs", agree,
                total, elapsed);
  report_line(1, "exact linear verification", ok, detail);
  CHECK(agree == total);
  CHECK(elapsed < kLinearBudgetSeconds);
}

TEST_CASE("criterion 2") {
  const auto t0 = Clock::now();
  Rng rng(777);
  int sound = 0, monotone = 0, total = 0;
  for (int trial = 0; trial < kSosTaskCount; ++trial) {
    int v, deg;
    bool two_levels = true;
    if (trial < 42) {
      v = 1 + trial % 3;
      deg = 2 + static_cast<int>(rng.integer(0, 2));
    } else if (trial < 47) {
      v = 4;
      deg = 2;
    } else if (trial < 49) {
      v = 5;
      deg = 2;
    } else {
      v = 6;
      deg = 4;
      two_levels = false;  // one level keeps the largest instance inside the budget
    }
    const Polynomial f = random_box_poly(rng, v, deg);
    Vec lo(v), hi(v);
    for (int i = 0; i < v; ++i) {
      lo[i] = rng.real(-1.5, -0.5);
      hi[i] = rng.real(0.5, 1.5);
    }
    const auto K = SemiAlgebraicSet::box(lo, hi);
    const int d0 = minimum_relaxation_degree(f, K);
    const auto levels = run_hierarchy(f, K, d0, two_levels ? d0 + 1 : d0, kInf);
    const double reference = sampled_min(f, lo, hi, rng);

    ++total;
    bool this_sound = !levels.empty();
    for (const auto& lvl : levels)
      if (lvl.bound > reference + kSosSlack) this_sound = false;
    if (this_sound) ++sound;
    bool this_monotone = true;
    for (size_t i = 1; i < levels.size(); ++i)
      if (levels[i].bound + 1e-9 < levels[i - 1].bound) this_monotone = false;
    if (this_monotone) ++monotone;
  }
  const double elapsed = seconds_since(t0);
  const bool ok = sound == total && monotone == total && elapsed < kSosBudgetSeconds;
  char detail[160];
  std::snprintf(detail, sizeof detail,
                "%d/%d bounds below sampled minimum + 1e-6, %d/%d hierarchies monotone, %.1fs",
                sound, total, monotone, total, elapsed);
  report_line(2, "relaxation bounds stay sound", ok, detail);
  CHECK(sound == total);
  CHECK(monotone == total);
  CHECK(elapsed < kSosBudgetSeconds);
}

TEST_CASE("criterion 3") {
  Rng rng(31337);
  int tight = 0;
  for (int trial = 0; trial < kTightnessCount; ++trial) {
    const int v = 1 + trial % 3;
    Mat a(v, v);
    for (int i = 0; i < v; ++i)
      for (int j = 0; j < v; ++j) a(i, j) = rng.real(-1.0, 1.0);
    const Mat h = a.transpose() * a + 0.3 * Mat::Identity(v, v);
    Vec c(v);
    for (int i = 0; i < v; ++i) c[i] = rng.real(-1.0, 1.0);

    QuadraticProgram qp = QuadraticProgram::make(v);
    qp.H = h;
    qp.lin.c = c;
    qp.lin.lo = Vec::Constant(v, -1.0);
    qp.lin.hi = Vec::Constant(v, 1.0);
    const auto sr = solve_qp(qp);

    Polynomial f = Polynomial::constant(v, 0.0);
    for (int i = 0; i < v; ++i) {
      MultiIndex sq(static_cast<size_t>(v), 0);
      sq[static_cast<size_t>(i)] = 2;
      f.add_term(sq, 0.5 * h(i, i));
      for (int j = i + 1; j < v; ++j) {
        MultiIndex cross(static_cast<size_t>(v), 0);
        cross[static_cast<size_t>(i)] = 1;
        cross[static_cast<size_t>(j)] = 1;
        f.add_term(cross, h(i, j));
      }
      MultiIndex lin(static_cast<size_t>(v), 0);
      lin[static_cast<size_t>(i)] = 1;
      f.add_term(lin, c[i]);
    }
    const auto K = SemiAlgebraicSet::box(qp.lin.lo, qp.lin.hi);
    const auto b = solve_relaxation(build_putinar_sdp(f, K, 1));
    if (sr.status == SolveStatus::Optimal && std::abs(b.bound - sr.objective) <= kTightnessTol)
      ++tight;
  }
  const bool ok = tight == kTightnessCount;
  char detail[96];
  std::snprintf(detail, sizeof detail, "%d/%d first-level bounds within 1e-5 of the qp optimum",
                tight, kTightnessCount);
  report_line(3, "first relaxation level is exact on convex quadratics", ok, detail);
  CHECK(tight == kTightnessCount);
}

TEST_CASE("criterion 4") {
  std::vector<std::pair<VerificationTask, RbfConfig>> tasks;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const int n = 2 + static_cast<int>(seed % 3);
    tasks.push_back({generate_scenario(ScenarioFamily::Rbf, n, seed, BiasPlan::Planted).task,
                     RbfConfig{}});
    tasks.push_back({generate_scenario(ScenarioFamily::Rbf, n, seed, BiasPlan::Masked).task,
                     RbfConfig{}});
  }
  {
    VerificationTask adjacent;
    RbfKernelModel rm;
    rm.gamma = 2.0;
    rm.entries.push_back({1.0, -1.0, vec({0.0})});
    rm.entries.push_back({1.0, 1.0, vec({1.0})});
    adjacent.model = rm;
    adjacent.domains = {{0.0, 1.0, FeatureKind::Continuous}};
    adjacent.spec = per_feature_blocks({Threshold::unlimited()}, 0.0);
    adjacent.mode = TaskMode::Classification;
    tasks.push_back({adjacent, RbfConfig{}});
  }
  {
    VerificationTask far;
    RbfKernelModel rm;
    rm.gamma = 1.0;
    rm.entries.push_back({1.0, 1.0, vec({10.0})});
    rm.entries.push_back({1.0, -1.0, vec({-10.0})});
    far.model = rm;
    far.domains = {{-15.0, 15.0, FeatureKind::Continuous}};
    far.spec = per_feature_blocks({Threshold::finite(0.0)}, 0.0);
    far.mode = TaskMode::Classification;
    tasks.push_back({far, RbfConfig{}});
  }

  int witnesses_checked = 0, witness_sign_ok = 0;
  int certified = 0, clean_certified = 0;
  long flips_seen = 0;
  std::uint64_t probe_seed = 5000;
  for (const auto& [task, cfg] : tasks) {
    const auto out = verify_rbf(task, cfg, 1);
    const double eff_eps =
        task.mode == TaskMode::Regression ? 0.5 * task.spec.delta : cfg.epsilon;
    if (out.verdict.is_biased()) {
      ++witnesses_checked;
      const auto& inst = std::get<Biased>(out.verdict.value).instance;
      if (evaluate(task.model, inst.x) <= -eff_eps &&
          evaluate(task.model, inst.x_prime) >= eff_eps)
        ++witness_sign_ok;
    } else if (out.verdict.is_no_bias()) {
      ++certified;
      Rng rng(probe_seed++);
      long flips = 0;
      for (long k = 0; k < kClosePairProbes; ++k) {
        const auto [x, xp] = random_close_pair(rng, task);
        if (check_bias_instance(task.model, task.domains, task.spec, task.mode, x, xp)) ++flips;
      }
      flips_seen += flips;
      if (flips == 0) ++clean_certified;
    }
  }
  const bool ok = witnesses_checked > 0 && witness_sign_ok == witnesses_checked &&
                  certified > 0 && clean_certified == certified;
  char detail[192];
  std::snprintf(detail, sizeof detail,
                "%d/%d witnesses with proper signs; %d/%d certified outcomes clean over %ldk "
                "random close pairs each, %ld flips",
                witness_sign_ok, witnesses_checked, clean_certified, certified,
                kClosePairProbes / 1000, flips_seen);
  report_line(4, "rbf verdicts hold in both directions", ok, detail);
  CHECK(witness_sign_ok == witnesses_checked);
  CHECK(witnesses_checked > 0);
  CHECK(clean_certified == certified);
  CHECK(certified > 0);
}

TEST_CASE("criterion 5") {
  int consistent = 0, total = 0;
  for (auto family : {ScenarioFamily::Linear, ScenarioFamily::Poly, ScenarioFamily::Rbf}) {
    for (std::uint64_t seed = 0; seed < kMaskingSeeds; ++seed) {
      const int n = 2 + static_cast<int>(seed % 3);
      auto planted = generate_scenario(family, n, seed, BiasPlan::Planted);
      auto masked = generate_scenario(family, n, seed, BiasPlan::Masked);
      ++total;
      if (meta_verify(planted.task).verdict.is_biased() &&
          meta_verify(masked.task).verdict.is_no_bias())
        ++consistent;
    }
  }
  const bool ok = consistent == total && total == 3 * kMaskingSeeds;
  char detail[96];
  std::snprintf(detail, sizeof detail,
                "%d/%d planted-vs-masked pairs split into biased/no-bias", consistent, total);
  report_line(5, "masking decides the verdict across families", ok, detail);
  CHECK(consistent == total);
}

TEST_CASE("criterion 6") {
  int clean = 0, clean_total = 0;
  for (auto family : {ScenarioFamily::Linear, ScenarioFamily::Poly, ScenarioFamily::Rbf}) {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      auto masked = generate_scenario(family, 3, seed, BiasPlan::Masked);
      if (!meta_verify(masked.task).verdict.is_no_bias()) continue;  // counted by criterion 5
      ++clean_total;
      RandomTestConfig cfg;
      cfg.sample_budget = kTesterBudget;
      cfg.seed = 100 + seed;
      const auto out = random_test(masked.task, cfg);
      if (!out.found) ++clean;
    }
  }

  int fast = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto planted = generate_scenario(ScenarioFamily::Linear, 3, seed, BiasPlan::Planted);
    RandomTestConfig cfg;
    cfg.sample_budget = kTesterFastBudget;
    cfg.seed = 900 + seed;
    const auto out = random_test(planted.task, cfg);
    if (out.found && out.samples_used <= kTesterFastBudget) ++fast;
  }

  const bool ok = clean == clean_total && clean_total == 9 && fast >= 9;
  char detail[128];
  std::snprintf(detail, sizeof detail,
                "%d/%d certified scenarios stay NotFound at %ld samples; %d/10 planted found "
                "within %ld",
                clean, clean_total, kTesterBudget, fast, kTesterFastBudget);
  report_line(6, "random testing baseline matches the expected pattern", ok, detail);
  CHECK(clean == clean_total);
  CHECK(clean_total == 9);
  CHECK(fast >= 9);
}

TEST_CASE("criterion 7") {
  const double computed = rbf_search_radius(1, 1.0, 1.0, 1e-8);
  const double closed_form = std::sqrt(8.0 * std::log(10.0));  // sqrt(ln 1e8)
  const bool ok = std::abs(computed - closed_form) <= kRadiusTol;
  char detail[96];
  std::snprintf(detail, sizeof detail, "radius %.12f vs closed form %.12f", computed,
                closed_form);
  report_line(7, "search radius matches the closed form", ok, detail);
  CHECK(std::abs(computed - closed_form) <= kRadiusTol);
}

TEST_CASE("criterion 8") {
  using Json = nlohmann::ordered_json;
  int identical = 0, total = 0;
  for (auto [family, plan] :
       {std::pair{ScenarioFamily::Rbf, BiasPlan::Planted},
        std::pair{ScenarioFamily::Poly, BiasPlan::Masked},
        std::pair{ScenarioFamily::Linear, BiasPlan::Planted}}) {
    auto scenario = generate_scenario(family, 3, 42, plan);
    RunOptions opts;
    opts.mode = "both";
    opts.workers = 2;
    opts.seed = 7;
    opts.sample_budget = 5000;
    const auto a = run_scenario(scenario, opts);
    const auto b = run_scenario(scenario, opts);
    Json ra = Json::parse(a.report);
    Json rb = Json::parse(b.report);
    ra.erase("timings");
    rb.erase("timings");
    ++total;
    if (ra.dump() == rb.dump() && a.exit_code == b.exit_code) ++identical;
  }
  const bool ok = identical == total;
  char detail[96];
  std::snprintf(detail, sizeof detail,
                "%d/%d reruns byte-identical once timing fields are stripped", identical, total);
  report_line(8, "reports are deterministic", ok, detail);
  CHECK(identical == total);
}
