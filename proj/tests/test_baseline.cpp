#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include <fairver/baseline.hpp>

#include "test_util.hpp"

using namespace fairver;
using testutil::one_block;
using testutil::per_feature_blocks;
using testutil::vec;

namespace {

VerificationTask make_task(ModelSpec model, std::vector<FeatureDomain> domains,
                           PerturbationSpec spec, TaskMode mode) {
  VerificationTask t;
  t.model = std::move(model);
  t.domains = std::move(domains);
  t.spec = std::move(spec);
  t.mode = mode;
  return t;
}

FeatureDomain boolean_domain() { return {0.0, 1.0, FeatureKind::Discrete}; }

}  // namespace

TEST_CASE("protected flip finds the planted classifier flip fast") {
  auto task = make_task(LinearModel{vec({1.0}), -0.5}, {boolean_domain()},
                        per_feature_blocks({Threshold::unlimited()}, 0.0),
                        TaskMode::Classification);
  RandomTestConfig cfg;
  cfg.sample_budget = 1000;
  cfg.seed = 11;
  auto out = random_test(task, cfg);
  REQUIRE(out.found);
  REQUIRE(out.instance.has_value());
  CHECK(out.samples_used <= 10);  // flip probability one half per sample
  CHECK(check_bias_instance(task.model, task.domains, task.spec, task.mode,
                            out.instance->x, out.instance->x_prime));
}

TEST_CASE("certified no bias models never yield a sample") {
  std::vector<FeatureDomain> ds = {boolean_domain(), {0.0, 1.0, FeatureKind::Continuous}};
  auto spec = per_feature_blocks({Threshold::unlimited(), Threshold::finite(0.0)}, 0.5);
  auto task = make_task(LinearModel{vec({0.0, 1.0}), 0.0}, ds, spec, TaskMode::Regression);

  auto verdict = meta_verify(task);
  REQUIRE(verdict.verdict.is_no_bias());

  RandomTestConfig cfg;
  cfg.sample_budget = 50000;
  cfg.seed = 3;
  auto out = random_test(task, cfg);
  CHECK_FALSE(out.found);
  CHECK(out.samples_used == 50000);
  CHECK(std::string(out.kind_name()) == "NotFound");
}

TEST_CASE("budget edge cases") {
  auto task = make_task(LinearModel{vec({0.0}), 1.0}, {boolean_domain()},
                        per_feature_blocks({Threshold::unlimited()}, 0.1),
                        TaskMode::Regression);
  RandomTestConfig cfg;
  cfg.sample_budget = 0;
  CHECK_THROWS_AS(random_test(task, cfg), Error);

  cfg.sample_budget = 1;
  auto out = random_test(task, cfg);  // constant model cannot show a gap
  CHECK_FALSE(out.found);
  CHECK(out.samples_used == 1);
}

TEST_CASE("identical seeds replay the identical outcome") {
  auto task = make_task(LinearModel{vec({1.0, 0.3}), -0.7},
                        {boolean_domain(), {0.0, 1.0, FeatureKind::Continuous}},
                        per_feature_blocks({Threshold::unlimited(), Threshold::finite(0.2)}, 0.0),
                        TaskMode::Classification);
  RandomTestConfig cfg;
  cfg.sample_budget = 2000;
  cfg.seed = 99;
  for (int workers : {1, 4}) {
    cfg.workers = workers;
    auto a = random_test(task, cfg);
    auto b = random_test(task, cfg);
    CAPTURE(workers);
    REQUIRE(a.found == b.found);
    CHECK(a.samples_used == b.samples_used);
    if (a.found) {
      CHECK(a.instance->x == b.instance->x);
      CHECK(a.instance->x_prime == b.instance->x_prime);
      CHECK(a.instance->gap == b.instance->gap);
    }
  }
}

TEST_CASE("uniform pairs cannot hit zero threshold continuous blocks") {
  // the gap lives on the protected bit, but feature 2 is pinned: independent
  // uniform draws never agree on a continuous coordinate
  std::vector<FeatureDomain> ds = {boolean_domain(), {0.0, 1.0, FeatureKind::Continuous}};
  auto spec = per_feature_blocks({Threshold::unlimited(), Threshold::finite(0.0)}, 0.0);
  auto task = make_task(LinearModel{vec({1.0, 0.1}), -0.5}, ds, spec, TaskMode::Classification);

  RandomTestConfig uni;
  uni.strategy = PerturbationStrategy::UniformPairs;
  uni.sample_budget = 5000;
  uni.seed = 17;
  CHECK_FALSE(random_test(task, uni).found);

  RandomTestConfig flip;
  flip.sample_budget = 5000;
  flip.seed = 17;
  auto out = random_test(task, flip);
  REQUIRE(out.found);
  CHECK(out.instance->x[1] == out.instance->x_prime[1]);
}

TEST_CASE("uniform pairs work when every block is unlimited") {
  // f(x) = x on [0,1], delta 0.5: a quarter of independent pairs are far apart
  auto task = make_task(LinearModel{vec({1.0}), 0.0}, {{0.0, 1.0, FeatureKind::Continuous}},
                        one_block(1, Threshold::unlimited(), 0.5), TaskMode::Regression);
  RandomTestConfig cfg;
  cfg.strategy = PerturbationStrategy::UniformPairs;
  cfg.sample_budget = 1000;
  cfg.seed = 5;
  auto out = random_test(task, cfg);
  REQUIRE(out.found);
  CHECK(std::abs(out.instance->gap) > 0.5);
}

TEST_CASE("protected flip leaves bounded blocks alone") {
  // model reads only the pinned coordinate, so flip pairs always tie
  std::vector<FeatureDomain> ds = {boolean_domain(), {0.0, 1.0, FeatureKind::Continuous}};
  auto spec = per_feature_blocks({Threshold::unlimited(), Threshold::finite(0.0)}, 1e-6);
  auto task = make_task(LinearModel{vec({0.0, 5.0}), 0.0}, ds, spec, TaskMode::Regression);
  RandomTestConfig cfg;
  cfg.sample_budget = 3000;
  cfg.seed = 23;
  auto out = random_test(task, cfg);
  CHECK_FALSE(out.found);
}

TEST_CASE("multi feature unlimited blocks resample together") {
  auto task = make_task(LinearModel{vec({1.0, 1.0}), -0.5},
                        {boolean_domain(), boolean_domain()},
                        one_block(2, Threshold::unlimited(), 0.0), TaskMode::Classification);
  RandomTestConfig cfg;
  cfg.sample_budget = 500;
  cfg.seed = 8;
  auto out = random_test(task, cfg);
  REQUIRE(out.found);
  CHECK(check_bias_instance(task.model, task.domains, task.spec, task.mode,
                            out.instance->x, out.instance->x_prime));
}
