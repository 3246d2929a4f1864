#include "fairver/core_model.hpp"

#include <cmath>

namespace fairver {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "dimension_mismatch";
    case ErrorCode::InvalidSpec: return "invalid_spec";
    case ErrorCode::PartitionCoverage: return "partition_coverage";
    case ErrorCode::ThresholdSign: return "threshold_sign";
    case ErrorCode::SizeExceeded: return "size_exceeded";
    case ErrorCode::NonConvex: return "non_convex";
    case ErrorCode::DegreeTooLow: return "degree_too_low";
    case ErrorCode::UnsupportedIntegrality: return "unsupported_integrality";
    case ErrorCode::ParseError: return "parse_error";
  }
  return "unknown";
}

long FeatureDomain::value_count() const {
  if (!is_discrete()) fail(ErrorCode::InvalidSpec, "value_count on continuous domain");
  return static_cast<long>(std::llround(upper - lower)) + 1;
}

void FeatureDomain::validate() const {
  if (!std::isfinite(lower) || !std::isfinite(upper) || lower > upper)
    fail(ErrorCode::InvalidSpec, "feature domain bounds invalid");
  if (is_discrete()) {
    if (std::abs(lower - std::round(lower)) > 1e-9 ||
        std::abs(upper - std::round(upper)) > 1e-9)
      fail(ErrorCode::InvalidSpec, "discrete domain bounds must be integers");
  }
}

Threshold Threshold::finite(double v) {
  if (!(v >= 0.0) || !std::isfinite(v))
    fail(ErrorCode::ThresholdSign, "threshold must be finite and non-negative");
  Threshold t;
  t.unlimited_ = false;
  t.value_ = v;
  return t;
}

Threshold Threshold::unlimited() {
  Threshold t;
  t.unlimited_ = true;
  t.value_ = 0.0;
  return t;
}

double Threshold::value() const {
  if (unlimited_) fail(ErrorCode::InvalidSpec, "value() on unlimited threshold");
  return value_;
}

void PerturbationSpec::validate(int feature_count) const {
  if (blocks.size() != thresholds.size())
    fail(ErrorCode::InvalidSpec, "one threshold per block required");
  if (!std::isfinite(delta) || delta < 0.0)
    fail(ErrorCode::InvalidSpec, "delta must be finite and non-negative");
  std::vector<int> seen(feature_count, 0);
  for (const auto& block : blocks) {
    if (block.empty()) fail(ErrorCode::PartitionCoverage, "empty block");
    for (int i : block) {
      if (i < 0 || i >= feature_count)
        fail(ErrorCode::PartitionCoverage, "block index out of range");
      seen[i] += 1;
    }
  }
  for (int i = 0; i < feature_count; ++i) {
    if (seen[i] != 1)
      fail(ErrorCode::PartitionCoverage,
           "feature " + std::to_string(i) + " covered " +
               std::to_string(seen[i]) + " times");
  }
}

std::vector<Threshold> PerturbationSpec::per_feature(int feature_count) const {
  validate(feature_count);
  std::vector<Threshold> eps(feature_count);
  for (std::size_t j = 0; j < blocks.size(); ++j)
    for (int i : blocks[j]) eps[i] = thresholds[j];
  return eps;
}

namespace {

void validate_entries(const std::vector<KernelEntry>& entries, int n) {
  if (entries.empty()) fail(ErrorCode::InvalidSpec, "kernel model needs entries");
  for (const auto& e : entries) {
    if (e.sv.size() != n)
      fail(ErrorCode::DimensionMismatch, "support vector dimension mismatch");
    if (!std::isfinite(e.weight) || !std::isfinite(e.label))
      fail(ErrorCode::InvalidSpec, "kernel entry weight/label not finite");
  }
}

}  // namespace

int feature_count(const ModelSpec& model) {
  return std::visit(
      [](const auto& m) -> int {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, LinearModel>)
          return static_cast<int>(m.w.size());
        else
          return static_cast<int>(m.entries.front().sv.size());
      },
      model);
}

void validate_model(const ModelSpec& model) {
  if (const auto* lin = std::get_if<LinearModel>(&model)) {
    if (lin->w.size() == 0) fail(ErrorCode::InvalidSpec, "empty weight vector");
    if (!lin->w.allFinite() || !std::isfinite(lin->b))
      fail(ErrorCode::InvalidSpec, "linear model coefficients not finite");
  } else if (const auto* poly = std::get_if<PolyKernelModel>(&model)) {
    if (poly->entries.empty())
      fail(ErrorCode::InvalidSpec, "poly kernel needs entries");
    validate_entries(poly->entries, static_cast<int>(poly->entries.front().sv.size()));
    if (poly->degree < 1) fail(ErrorCode::InvalidSpec, "kernel degree must be >= 1");
    if (!std::isfinite(poly->scale) || !std::isfinite(poly->offset))
      fail(ErrorCode::InvalidSpec, "kernel parameters not finite");
  } else {
    const auto& rbf = std::get<RbfKernelModel>(model);
    if (rbf.entries.empty()) fail(ErrorCode::InvalidSpec, "rbf kernel needs entries");
    validate_entries(rbf.entries, static_cast<int>(rbf.entries.front().sv.size()));
    if (!(rbf.gamma > 0.0) || !std::isfinite(rbf.gamma))
      fail(ErrorCode::InvalidSpec, "rbf gamma must be positive");
  }
}

double evaluate(const ModelSpec& model, const Vec& x) {
  const int n = feature_count(model);
  if (x.size() != n) fail(ErrorCode::DimensionMismatch, "evaluate: point dimension");
  if (const auto* lin = std::get_if<LinearModel>(&model)) {
    return lin->w.dot(x) + lin->b;
  }
  if (const auto* poly = std::get_if<PolyKernelModel>(&model)) {
    double acc = 0.0;
    for (const auto& e : poly->entries) {
      double k = std::pow(poly->scale * e.sv.dot(x) + poly->offset, poly->degree);
      acc += e.weight * e.label * k;
    }
    return acc;
  }
  const auto& rbf = std::get<RbfKernelModel>(model);
  double acc = 0.0;
  for (const auto& e : rbf.entries) {
    acc += e.weight * e.label * std::exp(-rbf.gamma * (x - e.sv).squaredNorm());
  }
  return acc;
}

bool validate_point(const std::vector<FeatureDomain>& domains, const Vec& x,
                    double tol) {
  if (x.size() != static_cast<long>(domains.size()))
    fail(ErrorCode::DimensionMismatch, "validate_point: point dimension");
  for (std::size_t i = 0; i < domains.size(); ++i) {
    const double v = x[static_cast<long>(i)];
    if (!std::isfinite(v)) return false;
    if (v < domains[i].lower - tol || v > domains[i].upper + tol) return false;
    if (domains[i].is_discrete() && std::abs(v - std::round(v)) > tol) return false;
  }
  return true;
}

bool is_close(const PerturbationSpec& spec, const Vec& x, const Vec& x_prime,
              double tol) {
  if (x.size() != x_prime.size())
    fail(ErrorCode::DimensionMismatch, "is_close: point dimensions differ");
  const auto eps = spec.per_feature(static_cast<int>(x.size()));
  for (long i = 0; i < x.size(); ++i) {
    const Threshold& t = eps[static_cast<std::size_t>(i)];
    if (t.is_unlimited()) continue;
    if (std::abs(x[i] - x_prime[i]) > t.value() + tol) return false;
  }
  return true;
}

bool check_bias_instance(const ModelSpec& model,
                         const std::vector<FeatureDomain>& domains,
                         const PerturbationSpec& spec, TaskMode mode,
                         const Vec& x, const Vec& x_prime) {
  if (!validate_point(domains, x) || !validate_point(domains, x_prime)) return false;
  if (!is_close(spec, x, x_prime)) return false;
  const double fx = evaluate(model, x);
  const double fxp = evaluate(model, x_prime);
  if (mode == TaskMode::Regression) return std::abs(fx - fxp) > spec.delta;
  const double tau = kClassificationMargin;
  return (fx <= -tau && fxp >= tau) || (fx >= tau && fxp <= -tau);
}

const char* bound_convention_name(BoundConvention c) {
  switch (c) {
    case BoundConvention::RegressionGap: return "regression_gap";
    case BoundConvention::ClassificationMargin: return "classification_margin";
    case BoundConvention::RbfSignMargin: return "rbf_sign_margin";
  }
  return "unknown";
}

const char* Verdict::kind_name() const {
  if (is_no_bias()) return "no_bias";
  if (is_biased()) return "biased";
  return "inconclusive";
}

}  // namespace fairver
