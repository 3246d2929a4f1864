#pragma once

#include <Eigen/Dense>
#include <string>
#include <variant>
#include <vector>

#include "fairver/errors.hpp"

namespace fairver {

using Vec = Eigen::VectorXd;

// Margin below which a classifier output is treated as on the decision
// boundary. Output sign changes inside this band never count as label flips.
inline constexpr double kClassificationMargin = 1e-9;

enum class FeatureKind { Continuous, Discrete };

// Closed interval [lower, upper]. Discrete features take the integer
// values lower, lower+1, ..., upper (categories must be pre-encoded).
struct FeatureDomain {
  double lower = 0.0;
  double upper = 1.0;
  FeatureKind kind = FeatureKind::Continuous;

  bool is_discrete() const { return kind == FeatureKind::Discrete; }
  long value_count() const;  // discrete only
  void validate() const;
};

// Per-block perturbation radius: a finite non-negative bound, or unlimited.
// Unlimited is a distinguished state, not a large float stand-in.
class Threshold {
 public:
  Threshold() : unlimited_(false), value_(0.0) {}
  static Threshold finite(double v);
  static Threshold unlimited();

  bool is_unlimited() const { return unlimited_; }
  bool is_zero() const { return !unlimited_ && value_ == 0.0; }
  double value() const;  // finite thresholds only

  bool operator==(const Threshold&) const = default;

 private:
  bool unlimited_;
  double value_;
};

// Similarity spec: a partition of the feature indices into blocks, one
// threshold per block, and the output tolerance delta. Two points are
// "close" when every block satisfies max_i |x_i - x'_i| <= eps_block.
struct PerturbationSpec {
  std::vector<std::vector<int>> blocks;
  std::vector<Threshold> thresholds;
  double delta = 0.0;

  void validate(int feature_count) const;
  // Per-feature threshold lookup table (validates first).
  std::vector<Threshold> per_feature(int feature_count) const;
};

struct LinearModel {
  Vec w;
  double b = 0.0;
};

struct KernelEntry {
  double weight = 1.0;  // positive magnitude by convention
  double label = 1.0;   // +1 / -1
  Vec sv;
};

// f(x) = sum_i w_i y_i (scale * <sv_i, x> + offset)^degree
struct PolyKernelModel {
  double scale = 1.0;
  double offset = 0.0;
  int degree = 1;
  std::vector<KernelEntry> entries;
};

// f(x) = sum_i w_i y_i exp(-gamma * |x - sv_i|^2)
struct RbfKernelModel {
  double gamma = 1.0;
  std::vector<KernelEntry> entries;
};

using ModelSpec = std::variant<LinearModel, PolyKernelModel, RbfKernelModel>;

int feature_count(const ModelSpec& model);
void validate_model(const ModelSpec& model);
double evaluate(const ModelSpec& model, const Vec& x);

enum class TaskMode { Regression, Classification };

// Is x inside every feature domain, with discrete coordinates integral,
// up to tol?
bool validate_point(const std::vector<FeatureDomain>& domains, const Vec& x,
                    double tol = 1e-6);

// Do x and x' satisfy every block threshold (up to tol on finite blocks)?
bool is_close(const PerturbationSpec& spec, const Vec& x, const Vec& x_prime,
              double tol = 1e-9);

// Full bias-instance check: both points valid, close, and the outputs
// disagree (regression: |f(x) - f(x')| > delta; classification: predicted
// labels differ with margin kClassificationMargin on both sides).
bool check_bias_instance(const ModelSpec& model,
                         const std::vector<FeatureDomain>& domains,
                         const PerturbationSpec& spec, TaskMode mode,
                         const Vec& x, const Vec& x_prime);

struct BiasInstance {
  Vec x;
  Vec x_prime;
  double gap = 0.0;  // f(x) - f(x')
};

// What the certified bound attached to a NoBias verdict means.
//   RegressionGap:        min f(x) - f(x') over valid close pairs >= bound
//   ClassificationMargin: no split optimum below -margin, so no label flip
//   RbfSignMargin:        no pair with f(x) <= -eps and f(x') >= +eps found;
//                         bound is the smallest surrogate gap encountered
enum class BoundConvention { RegressionGap, ClassificationMargin, RbfSignMargin };

const char* bound_convention_name(BoundConvention c);

struct NoBias {
  double certified_bound = 0.0;
  BoundConvention convention = BoundConvention::RegressionGap;
};

struct Biased {
  BiasInstance instance;
};

struct Inconclusive {
  double best_bound = 0.0;
  std::string note;
};

struct Verdict {
  std::variant<NoBias, Biased, Inconclusive> value;

  bool is_no_bias() const { return std::holds_alternative<NoBias>(value); }
  bool is_biased() const { return std::holds_alternative<Biased>(value); }
  bool is_inconclusive() const {
    return std::holds_alternative<Inconclusive>(value);
  }
  const char* kind_name() const;
};

}  // namespace fairver
