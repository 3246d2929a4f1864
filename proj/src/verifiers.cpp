#include <fairver/verifiers.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <mutex>
#include <sstream>
#include <thread>

#include <fairver/convex_solvers.hpp>
#include <fairver/polynomials.hpp>
#include <fairver/sos.hpp>

namespace fairver {

namespace {

bool member(const std::vector<int>& xs, int i) {
  return std::find(xs.begin(), xs.end(), i) != xs.end();
}

long position_of(const std::vector<int>& xs, int i) {
  const auto it = std::find(xs.begin(), xs.end(), i);
  return it == xs.end() ? -1 : it - xs.begin();
}

std::string format_vec(const Vec& x) {
  std::ostringstream os;
  os << "(";
  for (long i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
  os << ")";
  return os.str();
}

void parallel_for(int workers, int count, const std::function<void(int)>& fn) {
  if (count <= 0) return;
  const int nw = std::max(1, std::min(workers, count));
  if (nw == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::mutex err_mu;
  std::exception_ptr err;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(nw));
  for (int t = 0; t < nw; ++t) {
    pool.emplace_back([&] {
      while (true) {
        const int i = next.fetch_add(1);
        if (i >= count) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> g(err_mu);
          if (!err) err = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

// Clamp into the domain, rounding discrete coordinates to integers.
Vec snap_to_domain(const std::vector<FeatureDomain>& domains, Vec x) {
  for (long i = 0; i < x.size(); ++i) {
    const auto& d = domains[static_cast<size_t>(i)];
    double v = x[i];
    if (d.is_discrete()) v = std::round(v);
    x[i] = std::min(d.upper, std::max(d.lower, v));
  }
  return x;
}

double midpoint_value(const FeatureDomain& d) {
  double v = 0.5 * (d.lower + d.upper);
  if (!std::isfinite(v)) v = std::isfinite(d.lower) ? d.lower : (std::isfinite(d.upper) ? d.upper : 0.0);
  if (d.is_discrete()) v = std::round(v);
  return std::min(d.upper, std::max(d.lower, v));
}

// Closeness rows between the x copy (slots 0..n-1) and x' copy (n..2n-1).
void add_pair_rows(LinearProgram& lp, const std::vector<Threshold>& thr, int n) {
  for (int i = 0; i < n; ++i) {
    if (thr[static_cast<size_t>(i)].is_unlimited()) continue;
    Vec row = Vec::Zero(2 * n);
    row[i] = 1.0;
    row[n + i] = -1.0;
    if (thr[static_cast<size_t>(i)].is_zero()) {
      lp.add_equality(row, 0.0);
    } else {
      const double eps = thr[static_cast<size_t>(i)].value();
      lp.add_inequality(row, eps);
      lp.add_inequality(-row, eps);
    }
  }
}

void fill_pair_boxes(LinearProgram& lp, const std::vector<FeatureDomain>& domains) {
  const int n = static_cast<int>(domains.size());
  for (int i = 0; i < n; ++i) {
    lp.lo[i] = lp.lo[n + i] = domains[static_cast<size_t>(i)].lower;
    lp.hi[i] = lp.hi[n + i] = domains[static_cast<size_t>(i)].upper;
  }
}

std::vector<int> pair_integer_vars(const std::vector<FeatureDomain>& domains) {
  std::vector<int> vars;
  const int n = static_cast<int>(domains.size());
  for (int i = 0; i < n; ++i) {
    if (domains[static_cast<size_t>(i)].is_discrete()) {
      vars.push_back(i);
      vars.push_back(n + i);
    }
  }
  return vars;
}

struct PairPoints {
  Vec x;
  Vec x_prime;
};

PairPoints split_pair(const Vec& z, int n) {
  return {z.head(n), z.tail(n)};
}

std::string verdict_note(int short_count, int total) {
  std::ostringstream os;
  os << short_count << " of " << total
     << " subproblems finished below tolerance without a validated witness";
  return os.str();
}

}  // namespace

void RbfConfig::validate() const {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon))
    fail(ErrorCode::InvalidSpec, "rbf epsilon must be positive and finite");
  if (weight_lower < 0.0)
    fail(ErrorCode::InvalidSpec, "rbf weight lower bound must be nonnegative");
  if (!(weight_upper > weight_lower))
    fail(ErrorCode::InvalidSpec, "rbf weight bounds must satisfy c < C");
}

void VerificationTask::validate() const {
  validate_model(model);
  const int n = feature_count(model);
  if (static_cast<int>(domains.size()) != n)
    fail(ErrorCode::DimensionMismatch, "domain count does not match model features");
  for (const auto& d : domains) d.validate();
  spec.validate(n);

  auto check_set = [&](const std::vector<int>& set, const char* name) {
    std::vector<int> seen;
    for (int i : set) {
      if (i < 0 || i >= n)
        fail(ErrorCode::InvalidSpec, std::string(name) + " index out of range");
      if (member(seen, i))
        fail(ErrorCode::InvalidSpec, std::string(name) + " index repeated");
      if (!domains[static_cast<size_t>(i)].is_discrete())
        fail(ErrorCode::InvalidSpec, std::string(name) + " must reference discrete attributes");
      seen.push_back(i);
    }
  };
  check_set(fixed_set, "fixed set");
  check_set(relax_set, "relax set");
  for (int i : relax_set)
    if (member(fixed_set, i))
      fail(ErrorCode::InvalidSpec, "fixed and relax sets overlap");

  if (std::holds_alternative<PolyKernelModel>(model)) {
    for (int i = 0; i < n; ++i) {
      const auto& d = domains[static_cast<size_t>(i)];
      if (!d.is_discrete() || member(fixed_set, i) || member(relax_set, i)) continue;
      if (d.value_count() > 3)
        fail(ErrorCode::UnsupportedIntegrality,
             "discrete attribute with more than 3 values must be fixed or relaxed");
    }
  }
  if (mode == TaskMode::Regression && !(spec.delta >= 0.0))
    fail(ErrorCode::InvalidSpec, "regression tolerance must be nonnegative");
}

std::vector<std::pair<Vec, Vec>> enumerate_fixed_pairs(const VerificationTask& task) {
  task.validate();
  const int n = feature_count(task.model);
  const auto thr = task.spec.per_feature(n);
  const auto& D = task.fixed_set;
  if (D.empty()) return {{Vec(0), Vec(0)}};

  // size guard first, from the per-feature pair counts
  long double total = 1.0L;
  for (int i : D) {
    const auto& d = task.domains[static_cast<size_t>(i)];
    const long double cnt = static_cast<long double>(d.value_count());
    const Threshold& t = thr[static_cast<size_t>(i)];
    long double pc;
    if (t.is_unlimited()) {
      pc = cnt * cnt;
    } else {
      const long double span =
          std::min(std::floor(static_cast<long double>(t.value()) + 1e-9L), cnt - 1.0L);
      pc = cnt + span * (2.0L * cnt - span - 1.0L);  // cnt + 2*sum_{k<=span}(cnt-k)
    }
    total *= pc;
  }
  if (total > 100000.0L) {
    std::ostringstream os;
    os << "fixed-pair count " << static_cast<unsigned long long>(std::min(total, 1.0e18L))
       << " exceeds the 100000 guard";
    fail(ErrorCode::SizeExceeded, os.str());
  }

  const size_t k = D.size();
  std::vector<double> lo(k), hi(k);
  for (size_t j = 0; j < k; ++j) {
    lo[j] = task.domains[static_cast<size_t>(D[j])].lower;
    hi[j] = task.domains[static_cast<size_t>(D[j])].upper;
  }

  std::vector<std::pair<Vec, Vec>> pairs;
  pairs.reserve(static_cast<size_t>(total));
  std::vector<double> v(k, 0.0);
  for (size_t j = 0; j < k; ++j) v[j] = lo[j];
  while (true) {
    // partner values compatible with v per coordinate
    std::vector<std::vector<double>> partners(k);
    for (size_t j = 0; j < k; ++j) {
      const Threshold& t = thr[static_cast<size_t>(D[j])];
      for (double b = lo[j]; b <= hi[j] + 0.5; b += 1.0) {
        if (!t.is_unlimited() && std::abs(v[j] - b) > t.value() + 1e-9) continue;
        partners[j].push_back(b);
      }
    }
    std::vector<size_t> idx(k, 0);
    while (true) {
      Vec a(static_cast<long>(k)), b(static_cast<long>(k));
      for (size_t j = 0; j < k; ++j) {
        a[static_cast<long>(j)] = v[j];
        b[static_cast<long>(j)] = partners[j][idx[j]];
      }
      pairs.emplace_back(std::move(a), std::move(b));
      size_t j = k;
      while (j > 0 && ++idx[j - 1] == partners[j - 1].size()) idx[--j] = 0;
      if (j == 0) break;
    }
    size_t j = k;
    while (j > 0) {
      v[j - 1] += 1.0;
      if (v[j - 1] <= hi[j - 1] + 0.5) break;
      v[j - 1] = lo[j - 1];
      --j;
    }
    if (j == 0) break;
  }
  return pairs;
}

namespace {

// Shared tail for the two linear paths: interpret a MIP outcome against a
// strict threshold, validating any witness before trusting it.
VerificationOutcome finish_linear(const VerificationTask& task, const SolveResult& sr,
                                  double optimum_offset, double tolerance,
                                  BoundConvention convention) {
  const int n = feature_count(task.model);
  VerificationOutcome out;
  SubproblemResult sub;
  sub.lower_bound = sr.certified_lower_bound + optimum_offset;
  sub.nodes = sr.nodes;
  sub.iterations = sr.iterations;

  switch (sr.status) {
    case SolveStatus::Optimal: {
      const double opt = sr.objective + optimum_offset;
      if (opt < -tolerance) {
        auto [x, xp] = split_pair(sr.z, n);
        x = snap_to_domain(task.domains, x);
        xp = snap_to_domain(task.domains, xp);
        BiasInstance inst{x, xp, evaluate(task.model, x) - evaluate(task.model, xp)};
        if (check_bias_instance(task.model, task.domains, task.spec, task.mode, x, xp)) {
          sub.witness = inst;
          sub.witness_valid = true;
          out.verdict.value = Biased{inst};
        } else {
          out.spurious_log.push_back("optimizer " + format_vec(x) + " / " + format_vec(xp) +
                                     " failed instance re-validation at objective " +
                                     std::to_string(opt));
          out.verdict.value = Inconclusive{sub.lower_bound, "solver optimum crosses the "
                                           "threshold but its witness failed re-validation"};
        }
      } else {
        out.verdict.value = NoBias{sub.lower_bound, convention};
      }
      break;
    }
    case SolveStatus::Infeasible:
      if (sr.certified_lower_bound == kInf) {
        sub.lower_bound = kInf;
        out.verdict.value = NoBias{kInf, convention};  // no valid close pair exists
      } else {
        out.verdict.value = Inconclusive{-kInf, "solver reported infeasible without a certificate"};
      }
      break;
    case SolveStatus::Unbounded:
      out.verdict.value = Inconclusive{-kInf, "objective unbounded below; no finite witness extracted"};
      break;
    case SolveStatus::ToleranceReached:
      out.verdict.value = Inconclusive{sub.lower_bound, "solver stopped at its node or iteration limit"};
      break;
  }
  out.subproblems.push_back(std::move(sub));
  return out;
}

}  // namespace

VerificationOutcome verify_linear_regression(const VerificationTask& task) {
  task.validate();
  if (!std::holds_alternative<LinearModel>(task.model))
    fail(ErrorCode::InvalidSpec, "regression path needs a linear model");
  if (task.mode != TaskMode::Regression)
    fail(ErrorCode::InvalidSpec, "regression path needs regression mode");
  const auto& lm = std::get<LinearModel>(task.model);
  const int n = static_cast<int>(lm.w.size());
  const auto thr = task.spec.per_feature(n);

  LinearProgram lp = LinearProgram::make(2 * n);
  lp.c.head(n) = lm.w;
  lp.c.tail(n) = -lm.w;
  fill_pair_boxes(lp, task.domains);
  add_pair_rows(lp, thr, n);

  MixedIntegerSpec mis;
  mis.base = lp;
  mis.integer_vars = pair_integer_vars(task.domains);
  const SolveResult sr = solve_mip(mis);
  return finish_linear(task, sr, 0.0, task.spec.delta, BoundConvention::RegressionGap);
}

VerificationOutcome verify_linear_classifier(const VerificationTask& task) {
  task.validate();
  if (!std::holds_alternative<LinearModel>(task.model))
    fail(ErrorCode::InvalidSpec, "classifier path needs a linear model");
  if (task.mode != TaskMode::Classification)
    fail(ErrorCode::InvalidSpec, "classifier path needs classification mode");
  const auto& lm = std::get<LinearModel>(task.model);
  const int n = static_cast<int>(lm.w.size());
  const auto thr = task.spec.per_feature(n);
  const double tau = kClassificationMargin;

  // split A pins the x' copy positive and drives g(x) down; split B mirrors
  auto build_split = [&](bool x_side_objective) {
    LinearProgram lp = LinearProgram::make(2 * n);
    if (x_side_objective)
      lp.c.head(n) = lm.w;
    else
      lp.c.tail(n) = lm.w;
    fill_pair_boxes(lp, task.domains);
    add_pair_rows(lp, thr, n);
    Vec row = Vec::Zero(2 * n);
    if (x_side_objective)
      row.tail(n) = -lm.w;
    else
      row.head(n) = -lm.w;
    lp.add_inequality(row, lm.b - tau);  // other copy stays >= tau
    MixedIntegerSpec mis;
    mis.base = lp;
    mis.integer_vars = pair_integer_vars(task.domains);
    return solve_mip(mis);
  };

  const SolveResult a = build_split(true);
  const SolveResult b = build_split(false);

  VerificationOutcome out;
  double bound = kInf;
  bool resolved = true;
  for (const SolveResult* sr : {&a, &b}) {
    SubproblemResult sub;
    sub.lower_bound = sr->certified_lower_bound == kInf
                          ? kInf
                          : sr->certified_lower_bound + lm.b;
    sub.nodes = sr->nodes;
    sub.iterations = sr->iterations;
    if (sr->status == SolveStatus::Optimal) {
      const double opt = sr->objective + lm.b;
      bound = std::min(bound, opt);
      if (opt < -tau && !out.verdict.is_biased()) {
        auto [x, xp] = split_pair(sr->z, n);
        x = snap_to_domain(task.domains, x);
        xp = snap_to_domain(task.domains, xp);
        BiasInstance inst{x, xp, evaluate(task.model, x) - evaluate(task.model, xp)};
        if (check_bias_instance(task.model, task.domains, task.spec, task.mode, x, xp)) {
          sub.witness = inst;
          sub.witness_valid = true;
          out.verdict.value = Biased{inst};
        } else {
          out.spurious_log.push_back("split optimizer " + format_vec(x) + " / " +
                                     format_vec(xp) + " failed instance re-validation");
          resolved = false;
        }
      }
    } else if (sr->status == SolveStatus::Infeasible && sr->certified_lower_bound == kInf) {
      // no pair puts the pinned copy on the positive side; split vacuous
    } else {
      resolved = false;
    }
    out.subproblems.push_back(std::move(sub));
  }

  if (out.verdict.is_biased()) return out;
  if (resolved) {
    out.verdict.value = NoBias{bound, BoundConvention::ClassificationMargin};
  } else {
    out.verdict.value = Inconclusive{bound == kInf ? -kInf : bound,
                                     "a sign split did not resolve to a certificate"};
  }
  return out;
}

namespace {

struct PolySubOutcome {
  SubproblemResult sub;
  bool resolved = false;  // bound met the target or a witness validated
  std::vector<std::string> spurious;
};

}  // namespace

VerificationOutcome verify_poly_kernel(const VerificationTask& task,
                                       const VerifierConfig& config) {
  task.validate();
  if (!std::holds_alternative<PolyKernelModel>(task.model))
    fail(ErrorCode::InvalidSpec, "polynomial path needs a polynomial kernel model");
  const auto& pk = std::get<PolyKernelModel>(task.model);
  const int n = feature_count(task.model);
  const auto thr = task.spec.per_feature(n);
  const double target = task.mode == TaskMode::Regression ? -task.spec.delta
                                                          : -kClassificationMargin;

  Polynomial g = build_gap_polynomial(expand_poly_kernel(pk));
  std::vector<bool> merged(static_cast<size_t>(n), false);
  for (int i = 0; i < n; ++i) {
    if (thr[static_cast<size_t>(i)].is_zero()) {
      g = g.merge_variables(i, n + i);
      merged[static_cast<size_t>(i)] = true;
    }
  }

  const auto pairs = enumerate_fixed_pairs(task);
  std::vector<PolySubOutcome> results(pairs.size());

  auto run_pair = [&](int pi) {
    const auto& [v, vp] = pairs[static_cast<size_t>(pi)];
    PolySubOutcome& res = results[static_cast<size_t>(pi)];
    res.sub.v = v;
    res.sub.v_prime = vp;

    Polynomial gk = g;
    for (size_t j = 0; j < task.fixed_set.size(); ++j) {
      const int i = task.fixed_set[j];
      gk = gk.substitute(i, v[static_cast<long>(j)]);
      if (!merged[static_cast<size_t>(i)]) gk = gk.substitute(n + i, vp[static_cast<long>(j)]);
    }

    // compact the surviving variables
    std::vector<int> used = gk.used_variables();
    std::sort(used.begin(), used.end());
    std::vector<int> new_index(static_cast<size_t>(2 * n), -1);
    for (size_t u = 0; u < used.size(); ++u) new_index[static_cast<size_t>(used[u])] = static_cast<int>(u);
    const int m2 = static_cast<int>(used.size());

    // lifts a reduced point back to a full (x, x') pair
    auto lift = [&](const Vec& y) {
      Vec x(n), xp(n);
      for (int i = 0; i < n; ++i) {
        const long j = position_of(task.fixed_set, i);
        if (j >= 0) {
          x[i] = v[j];
          xp[i] = vp[j];
          continue;
        }
        const int sx = new_index[static_cast<size_t>(i)];
        const int sp = merged[static_cast<size_t>(i)] ? sx : new_index[static_cast<size_t>(n + i)];
        double vx = sx >= 0 ? y[sx] : (sp >= 0 ? y[sp] : midpoint_value(task.domains[static_cast<size_t>(i)]));
        double vxp = sp >= 0 ? y[sp] : vx;
        x[i] = vx;
        xp[i] = vxp;
      }
      return PairPoints{snap_to_domain(task.domains, x), snap_to_domain(task.domains, xp)};
    };

    auto try_witness = [&](const Vec& y, double level_bound) {
      const PairPoints pp = lift(y);
      if (check_bias_instance(task.model, task.domains, task.spec, task.mode, pp.x, pp.x_prime)) {
        res.sub.witness = BiasInstance{pp.x, pp.x_prime,
                                       evaluate(task.model, pp.x) - evaluate(task.model, pp.x_prime)};
        res.sub.witness_valid = true;
        res.resolved = true;
        return true;
      }
      std::ostringstream os;
      os << "pair " << pi << " candidate " << format_vec(pp.x) << " / " << format_vec(pp.x_prime)
         << " rejected; relaxed bound " << level_bound;
      res.spurious.push_back(os.str());
      return false;
    };

    if (m2 == 0) {  // fully fixed pair: the gap is a constant
      const double c = gk.constant_term();
      res.sub.lower_bound = c;
      if (c >= target) {
        res.resolved = true;
      } else {
        try_witness(Vec(0), c);
      }
      return;
    }

    Vec lo(m2), hi(m2);
    for (int u = 0; u < m2; ++u) {
      const int slot = used[static_cast<size_t>(u)];
      const auto& d = task.domains[static_cast<size_t>(slot < n ? slot : slot - n)];
      lo[u] = d.lower;
      hi[u] = d.upper;
    }
    SemiAlgebraicSet K = SemiAlgebraicSet::box(lo, hi);

    for (int i = 0; i < n; ++i) {
      if (member(task.fixed_set, i) || merged[static_cast<size_t>(i)]) continue;
      const Threshold& t = thr[static_cast<size_t>(i)];
      if (t.is_unlimited()) continue;
      const int sx = new_index[static_cast<size_t>(i)];
      const int sp = new_index[static_cast<size_t>(n + i)];
      if (sx < 0 || sp < 0) continue;  // dropping the row only widens the set
      MultiIndex ex(static_cast<size_t>(m2), 0), ep(static_cast<size_t>(m2), 0);
      ex[static_cast<size_t>(sx)] = 1;
      ep[static_cast<size_t>(sp)] = 1;
      Polynomial row = Polynomial::constant(m2, t.value());
      row.add_term(ex, -1.0);
      row.add_term(ep, 1.0);
      K.add(row);
      Polynomial row2 = Polynomial::constant(m2, t.value());
      row2.add_term(ex, 1.0);
      row2.add_term(ep, -1.0);
      K.add(row2);
    }

    for (int i = 0; i < n; ++i) {
      const auto& d = task.domains[static_cast<size_t>(i)];
      if (!d.is_discrete() || member(task.fixed_set, i) || member(task.relax_set, i)) continue;
      const int k = static_cast<int>(d.value_count()) - 1;
      if (k < 1) continue;  // a single-value domain is pinned by its box
      for (const int slot : {new_index[static_cast<size_t>(i)],
                             merged[static_cast<size_t>(i)] ? -1 : new_index[static_cast<size_t>(n + i)]}) {
        if (slot < 0) continue;
        const Polynomial p = vanishing_polynomial(m2, slot, d.lower, k);
        K.add(p);
        K.add(p.scaled(-1.0));
      }
    }

    const Polynomial gk2 = gk.rename_variables(new_index, m2);
    const int d0 = minimum_relaxation_degree(gk2, K);
    int dmax = d0 + config.hierarchy_extra_levels;
    if (config.sos_degree_cap >= 0) dmax = std::max(d0, std::min(dmax, config.sos_degree_cap));
    const auto levels = run_hierarchy(gk2, K, d0, dmax, target);

    res.sub.lower_bound = levels.empty() ? -kInf : levels.back().bound;
    for (const auto& lvl : levels) {
      res.sub.iterations += lvl.iterations;
      res.sub.max_degree = std::max(res.sub.max_degree, lvl.degree);
    }
    if (res.sub.lower_bound >= target) {
      res.resolved = true;
      return;
    }
    for (const auto& lvl : levels) {
      if (lvl.candidate && try_witness(*lvl.candidate, lvl.bound)) return;
    }
  };

  parallel_for(config.workers, static_cast<int>(pairs.size()), run_pair);

  VerificationOutcome out;
  double best = kInf;
  int unresolved = 0;
  const SubproblemResult* first_witness = nullptr;
  for (auto& r : results) {
    best = std::min(best, r.sub.lower_bound);
    if (!r.resolved) ++unresolved;
    for (auto& s : r.spurious) out.spurious_log.push_back(std::move(s));
    if (!first_witness && r.sub.witness_valid) first_witness = &r.sub;
    out.subproblems.push_back(r.sub);
  }

  if (first_witness) {
    out.verdict.value = Biased{*first_witness->witness};
  } else if (unresolved == 0) {
    out.verdict.value = NoBias{best, task.mode == TaskMode::Regression
                                         ? BoundConvention::RegressionGap
                                         : BoundConvention::ClassificationMargin};
  } else {
    out.verdict.value = Inconclusive{best, verdict_note(unresolved, static_cast<int>(results.size()))};
  }
  return out;
}

namespace {

struct RbfJobOutcome {
  bool skipped = false;      // certified-empty search box
  bool unresolved = false;   // solver fell short of a certificate
  bool spurious = false;     // optimizer flipped but failed re-validation
  double gap = kInf;         // f(x*) - f(x'*) when recorded
  long iterations = 0;
  std::optional<BiasInstance> witness;
  std::string log;
};

}  // namespace

VerificationOutcome verify_rbf(const VerificationTask& task, const RbfConfig& config,
                               int workers) {
  task.validate();
  config.validate();
  if (!std::holds_alternative<RbfKernelModel>(task.model))
    fail(ErrorCode::InvalidSpec, "rbf path needs an rbf kernel model");
  const auto& rm = std::get<RbfKernelModel>(task.model);
  const int n = feature_count(task.model);
  const auto thr = task.spec.per_feature(n);

  double eps = config.epsilon;
  if (task.mode == TaskMode::Regression) {
    if (!(task.spec.delta > 0.0))
      fail(ErrorCode::InvalidSpec, "rbf regression verification needs a positive tolerance");
    eps = 0.5 * task.spec.delta;
  }

  VerificationOutcome out;
  const size_t M = rm.entries.size();
  std::vector<int> plus, minus;
  double wmin = kInf, wmax = 0.0;
  for (size_t i = 0; i < M; ++i) {
    const auto& e = rm.entries[i];
    (e.label > 0.0 ? plus : minus).push_back(static_cast<int>(i));
    wmin = std::min(wmin, e.weight);
    wmax = std::max(wmax, e.weight);
  }
  if (config.weight_lower > 0.0 && wmin <= config.weight_lower)
    fail(ErrorCode::InvalidSpec, "model weight at or below the stated lower bound");
  if (std::isfinite(config.weight_upper) && wmax >= config.weight_upper)
    fail(ErrorCode::InvalidSpec, "model weight at or above the stated upper bound");

  const double c_eff = config.weight_lower > 0.0 ? config.weight_lower : wmin;
  if (M > 0 && eps >= c_eff / 100.0)
    out.warnings.push_back("epsilon is not well separated from the smallest weight; "
                           "radius cutoffs may be too aggressive");
  for (int i = 0; i < n; ++i) {
    const auto& d = task.domains[static_cast<size_t>(i)];
    const double scale = static_cast<double>(n) * std::sqrt(eps);
    if (std::abs(d.lower) < scale || std::abs(d.upper) < scale) {
      out.warnings.push_back("a domain bound sits below n*sqrt(eps); kernel tail cutoffs "
                             "assume larger feature scales");
      break;
    }
  }
  bool relaxed_discrete = false;
  for (int i = 0; i < n; ++i)
    if (task.domains[static_cast<size_t>(i)].is_discrete() && !member(task.fixed_set, i) &&
        !member(task.relax_set, i))
      relaxed_discrete = true;
  if (relaxed_discrete)
    out.warnings.push_back("discrete attributes outside the fixed set are box-relaxed "
                           "on the rbf path");

  if (plus.empty() || minus.empty()) {
    out.verdict.value = NoBias{kInf, BoundConvention::RbfSignMargin};
    return out;
  }

  std::vector<double> radius(M, 0.0);
  for (size_t i = 0; i < M; ++i)
    radius[i] = rbf_search_radius(M, rm.entries[i].weight, rm.gamma, eps);

  double weight_plus = 0.0, weight_minus = 0.0;
  Vec center_plus = Vec::Zero(n), center_minus = Vec::Zero(n);
  for (int u : plus) {
    weight_plus += rm.entries[static_cast<size_t>(u)].weight;
    center_plus += rm.entries[static_cast<size_t>(u)].weight * rm.entries[static_cast<size_t>(u)].sv;
  }
  for (int u : minus) {
    weight_minus += rm.entries[static_cast<size_t>(u)].weight;
    center_minus += rm.entries[static_cast<size_t>(u)].weight * rm.entries[static_cast<size_t>(u)].sv;
  }

  const auto pairs = enumerate_fixed_pairs(task);
  const int per_pair = static_cast<int>(plus.size() * minus.size());
  const int total_jobs = static_cast<int>(pairs.size()) * per_pair;
  std::vector<RbfJobOutcome> jobs(static_cast<size_t>(total_jobs));

  auto run_job = [&](int jid) {
    RbfJobOutcome& jo = jobs[static_cast<size_t>(jid)];
    const int pi = jid / per_pair;
    const int rs = jid % per_pair;
    const int r = plus[static_cast<size_t>(rs / static_cast<int>(minus.size()))];
    const int s = minus[static_cast<size_t>(rs % static_cast<int>(minus.size()))];
    const auto& [v, vp] = pairs[static_cast<size_t>(pi)];
    const Vec& sv_r = rm.entries[static_cast<size_t>(r)].sv;
    const Vec& sv_s = rm.entries[static_cast<size_t>(s)].sv;

    QuadraticProgram qp = QuadraticProgram::make(2 * n);
    for (int i = 0; i < n; ++i) {
      qp.H(i, i) = weight_minus;
      qp.H(n + i, n + i) = weight_plus;
    }
    qp.lin.c.head(n) = -center_minus;
    qp.lin.c.tail(n) = -center_plus;

    for (int i = 0; i < n; ++i) {
      const auto& d = task.domains[static_cast<size_t>(i)];
      double xlo = std::max(d.lower, sv_s[i] - radius[static_cast<size_t>(s)]);
      double xhi = std::min(d.upper, sv_s[i] + radius[static_cast<size_t>(s)]);
      double plo = std::max(d.lower, sv_r[i] - radius[static_cast<size_t>(r)]);
      double phi = std::min(d.upper, sv_r[i] + radius[static_cast<size_t>(r)]);
      const long j = position_of(task.fixed_set, i);
      if (j >= 0) {
        if (v[j] < xlo - 1e-9 || v[j] > xhi + 1e-9 || vp[j] < plo - 1e-9 || vp[j] > phi + 1e-9) {
          jo.skipped = true;
          return;
        }
        xlo = xhi = v[j];
        plo = phi = vp[j];
      }
      if (xlo > xhi || plo > phi) {
        jo.skipped = true;
        return;
      }
      qp.lin.lo[i] = xlo;
      qp.lin.hi[i] = xhi;
      qp.lin.lo[n + i] = plo;
      qp.lin.hi[n + i] = phi;
    }

    for (int i = 0; i < n; ++i) {
      if (position_of(task.fixed_set, i) >= 0) continue;  // pinned above
      const Threshold& t = thr[static_cast<size_t>(i)];
      if (t.is_unlimited()) continue;
      Vec row = Vec::Zero(2 * n);
      row[i] = 1.0;
      row[n + i] = -1.0;
      if (t.is_zero()) {
        qp.lin.add_equality(row, 0.0);
      } else {
        qp.lin.add_inequality(row, t.value());
        qp.lin.add_inequality(-row, t.value());
      }
    }

    const SolveResult sr = solve_qp(qp);
    jo.iterations = sr.iterations;
    if (sr.status == SolveStatus::Infeasible) {
      if (sr.certified_lower_bound == kInf)
        jo.skipped = true;
      else
        jo.unresolved = true;
      return;
    }
    if (sr.status != SolveStatus::Optimal) {
      jo.unresolved = true;
      return;
    }

    auto [x, xp] = split_pair(sr.z, n);
    const double fx = evaluate(task.model, x);
    const double fxp = evaluate(task.model, xp);
    if (fx <= -eps && fxp >= eps) {
      const Vec xs = snap_to_domain(task.domains, x);
      const Vec xps = snap_to_domain(task.domains, xp);
      if (check_bias_instance(task.model, task.domains, task.spec, task.mode, xs, xps)) {
        jo.witness = BiasInstance{xs, xps, evaluate(task.model, xs) - evaluate(task.model, xps)};
        return;
      }
      jo.spurious = true;
      std::ostringstream os;
      os << "pair " << pi << " support pair (" << r << ", " << s << ") optimizer "
         << format_vec(x) << " / " << format_vec(xp)
         << " flips signs but failed instance re-validation";
      jo.log = os.str();
      return;
    }
    jo.gap = fx - fxp;
  };

  parallel_for(workers, total_jobs, run_job);

  double best_gap = kInf;
  int unresolved = 0;
  bool spurious = false;
  std::optional<BiasInstance> first_witness;
  for (size_t pi = 0; pi < pairs.size(); ++pi) {
    SubproblemResult sub;
    sub.v = pairs[pi].first;
    sub.v_prime = pairs[pi].second;
    sub.lower_bound = kInf;
    for (int rs = 0; rs < per_pair; ++rs) {
      const RbfJobOutcome& jo = jobs[pi * static_cast<size_t>(per_pair) + static_cast<size_t>(rs)];
      if (jo.unresolved) ++unresolved;
      if (jo.spurious) {
        spurious = true;
        out.spurious_log.push_back(jo.log);
      }
      if (jo.gap < sub.lower_bound) sub.lower_bound = jo.gap;
      sub.iterations += jo.iterations;
      if (jo.witness && !sub.witness) {
        sub.witness = jo.witness;
        sub.witness_valid = true;
      }
    }
    best_gap = std::min(best_gap, sub.lower_bound);
    if (!first_witness && sub.witness_valid) first_witness = sub.witness;
    out.subproblems.push_back(std::move(sub));
  }

  if (first_witness) {
    out.verdict.value = Biased{*first_witness};
  } else if (unresolved > 0 || spurious) {
    out.verdict.value = Inconclusive{best_gap == kInf ? -kInf : best_gap,
                                     spurious ? "a surrogate optimizer flipped signs but failed "
                                                "re-validation"
                                              : "a surrogate subproblem did not resolve"};
  } else {
    out.verdict.value = NoBias{best_gap, BoundConvention::RbfSignMargin};
  }
  return out;
}

double rbf_search_radius(std::size_t entry_count, double weight, double gamma,
                         double epsilon) {
  if (!(gamma > 0.0) || !(epsilon > 0.0))
    fail(ErrorCode::InvalidSpec, "search radius needs positive gamma and epsilon");
  const double arg = static_cast<double>(entry_count) * weight / epsilon;
  return arg > 1.0 ? std::sqrt(std::log(arg) / gamma) : 0.0;
}

std::vector<int> default_fixed_set(const std::vector<FeatureDomain>& domains,
                                   const PerturbationSpec& spec) {
  const int n = static_cast<int>(domains.size());
  const auto thr = spec.per_feature(n);
  std::vector<int> chosen;
  long double total = 1.0L;
  for (int i = 0; i < n; ++i) {
    const auto& d = domains[static_cast<size_t>(i)];
    if (!d.is_discrete() || d.value_count() > 3) continue;
    const long double cnt = static_cast<long double>(d.value_count());
    const Threshold& t = thr[static_cast<size_t>(i)];
    long double pc;
    if (t.is_unlimited()) {
      pc = cnt * cnt;
    } else {
      const long double span =
          std::min(std::floor(static_cast<long double>(t.value()) + 1e-9L), cnt - 1.0L);
      pc = cnt + span * (2.0L * cnt - span - 1.0L);
    }
    if (total * pc > 100000.0L) break;
    total *= pc;
    chosen.push_back(i);
  }
  return chosen;
}

VerificationOutcome meta_verify(const VerificationTask& task, const VerifierConfig& config) {
  task.validate();
  const int n = feature_count(task.model);
  const auto thr = task.spec.per_feature(n);

  bool all_zero = true;
  for (const auto& t : thr)
    if (!t.is_zero()) all_zero = false;
  if (all_zero) {
    VerificationOutcome out;  // identical points cannot disagree
    out.verdict.value = NoBias{0.0, task.mode == TaskMode::Regression
                                        ? BoundConvention::RegressionGap
                                        : BoundConvention::ClassificationMargin};
    return out;
  }

  if (std::holds_alternative<LinearModel>(task.model))
    return task.mode == TaskMode::Regression ? verify_linear_regression(task)
                                             : verify_linear_classifier(task);
  if (std::holds_alternative<PolyKernelModel>(task.model))
    return verify_poly_kernel(task, config);
  return verify_rbf(task, config.rbf, config.workers);
}

}  // namespace fairver
