#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fairver/core_model.hpp"
#include "test_util.hpp"

using namespace fairver;
using namespace fairver::testutil;

TEST_CASE("evaluate linear dot product") {
  LinearModel lin{vec({1, -1}), 0.0};
  CHECK(evaluate(lin, vec({2, 1})) == doctest::Approx(1.0));
}

TEST_CASE("evaluate rbf at a support vector") {
  RbfKernelModel rbf{1.0, {{1.0, 1.0, vec({0, 0})}}};
  CHECK(evaluate(rbf, vec({0, 0})) == doctest::Approx(1.0));
}

TEST_CASE("evaluate poly kernel squared dot product") {
  PolyKernelModel poly{1.0, 0.0, 2, {{1.0, 1.0, vec({1, 1})}}};
  CHECK(evaluate(poly, vec({1, 2})) == doctest::Approx(9.0));
}

TEST_CASE("evaluate rejects wrong dimension") {
  LinearModel lin{vec({1, -1}), 0.0};
  CHECK_THROWS_AS(evaluate(lin, vec({1, 2, 3})), Error);
}

TEST_CASE("validate_point boundaries and integrality") {
  auto discrete = boxes({{0, 1}}, FeatureKind::Discrete);
  CHECK(validate_point(discrete, vec({1})));
  CHECK_FALSE(validate_point(discrete, vec({0.5})));
  auto cont = boxes({{0, 5}});
  CHECK_FALSE(validate_point(cont, vec({5.0000001}), 1e-6 * 0.01));
  CHECK(validate_point(cont, vec({5.0})));
}

TEST_CASE("is_close threshold semantics") {
  auto inf_spec = one_block(2, Threshold::unlimited());
  CHECK(is_close(inf_spec, vec({0, 0}), vec({100, -3})));

  auto zero_spec = one_block(2, Threshold::finite(0.0));
  CHECK(is_close(zero_spec, vec({1, 2}), vec({1, 2})));
  CHECK_FALSE(is_close(zero_spec, vec({1, 2}), vec({1, 2.5})));

  auto counterfactual =
      per_feature_blocks({Threshold::unlimited(), Threshold::finite(0.0)});
  CHECK(is_close(counterfactual, vec({0, 3}), vec({9, 3})));
  CHECK_FALSE(is_close(counterfactual, vec({0, 3}), vec({9, 4})));
}

TEST_CASE("is_close is symmetric on random pairs") {
  Rng rng(7);
  auto domains = boxes({{-2, 2}, {-2, 2}, {-2, 2}});
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Threshold> ts;
    for (int i = 0; i < 3; ++i) {
      int kind = static_cast<int>(rng.integer(0, 2));
      ts.push_back(kind == 0   ? Threshold::unlimited()
                   : kind == 1 ? Threshold::finite(0.0)
                               : Threshold::finite(rng.real(0.0, 2.0)));
    }
    auto spec = per_feature_blocks(ts);
    Vec x = random_point(rng, domains);
    Vec xp = random_point(rng, domains);
    CHECK(is_close(spec, x, xp) == is_close(spec, xp, x));
  }
}

TEST_CASE("check_bias_instance constant model never biased") {
  LinearModel constant{vec({0, 0}), 3.5};
  auto domains = boxes({{0, 1}, {0, 1}});
  auto spec = one_block(2, Threshold::unlimited(), 0.0);
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    Vec x = random_point(rng, domains);
    Vec xp = random_point(rng, domains);
    CHECK_FALSE(check_bias_instance(constant, domains, spec, TaskMode::Regression, x, xp));
    CHECK_FALSE(check_bias_instance(constant, domains, spec, TaskMode::Classification, x, xp));
  }
}

TEST_CASE("check_bias_instance counterfactual sign flip") {
  LinearModel lin{vec({1, 0}), -0.5};
  std::vector<FeatureDomain> domains = {{0, 1, FeatureKind::Discrete},
                                        {0, 1, FeatureKind::Continuous}};
  auto spec = per_feature_blocks({Threshold::unlimited(), Threshold::finite(0.0)});
  CHECK(check_bias_instance(lin, domains, spec, TaskMode::Classification,
                            vec({0, 0.3}), vec({1, 0.3})));
  CHECK_FALSE(check_bias_instance(lin, domains, spec, TaskMode::Classification,
                                  vec({0, 0.3}), vec({1, 0.9})));
}

TEST_CASE("check_bias_instance symmetry and self pairs") {
  Rng rng(23);
  auto domains = boxes({{0, 1}, {0, 1}, {0, 1}});
  LinearModel lin{vec({2.0, -1.0, 0.5}), -0.7};
  auto spec = one_block(3, Threshold::unlimited(), 0.1);
  for (int trial = 0; trial < 100; ++trial) {
    Vec x = random_point(rng, domains);
    Vec xp = random_point(rng, domains);
    for (TaskMode mode : {TaskMode::Regression, TaskMode::Classification}) {
      CHECK(check_bias_instance(lin, domains, spec, mode, x, xp) ==
            check_bias_instance(lin, domains, spec, mode, xp, x));
      CHECK_FALSE(check_bias_instance(lin, domains, spec, mode, x, x));
    }
  }
}

TEST_CASE("rbf evaluation is bounded by total weight") {
  Rng rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    RbfKernelModel rbf;
    rbf.gamma = rng.real(0.1, 3.0);
    double total = 0.0;
    int m = static_cast<int>(rng.integer(1, 4));
    for (int i = 0; i < m; ++i) {
      Vec sv(2);
      sv << rng.real(-2, 2), rng.real(-2, 2);
      double w = rng.real(0.1, 2.0);
      rbf.entries.push_back({w, rng.coin() ? 1.0 : -1.0, sv});
      total += w;
    }
    auto domains = boxes({{-5, 5}, {-5, 5}});
    for (int k = 0; k < 20; ++k) {
      Vec x = random_point(rng, domains);
      CHECK(std::abs(evaluate(ModelSpec{rbf}, x)) <= total + 1e-12);
    }
  }
}

TEST_CASE("perturbation spec validation") {
  PerturbationSpec spec;
  spec.blocks = {{0, 1}, {1}};
  spec.thresholds = {Threshold::finite(1.0), Threshold::finite(0.0)};
  CHECK_THROWS_AS(spec.validate(2), Error);  // feature 1 covered twice

  PerturbationSpec gap;
  gap.blocks = {{0}};
  gap.thresholds = {Threshold::finite(1.0)};
  CHECK_THROWS_AS(gap.validate(2), Error);  // feature 1 uncovered

  CHECK_THROWS_AS(Threshold::finite(-0.5), Error);
}

TEST_CASE("domain validation") {
  FeatureDomain bad{2.0, 1.0, FeatureKind::Continuous};
  CHECK_THROWS_AS(bad.validate(), Error);
  FeatureDomain frac{0.0, 2.5, FeatureKind::Discrete};
  CHECK_THROWS_AS(frac.validate(), Error);
  FeatureDomain ok{0.0, 3.0, FeatureKind::Discrete};
  ok.validate();
  CHECK(ok.value_count() == 4);
}
