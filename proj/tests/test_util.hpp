#pragma once

#include <Eigen/Dense>
#include <vector>

#include "fairver/core_model.hpp"
#include "fairver/rng.hpp"

namespace fairver::testutil {

inline Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<long>(xs.size()));
  long i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

// Single-block perturbation spec covering n features.
inline PerturbationSpec one_block(int n, Threshold t, double delta = 0.0) {
  PerturbationSpec spec;
  std::vector<int> all(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) all[static_cast<std::size_t>(i)] = i;
  spec.blocks = {all};
  spec.thresholds = {t};
  spec.delta = delta;
  return spec;
}

// One singleton block per feature.
inline PerturbationSpec per_feature_blocks(const std::vector<Threshold>& ts,
                                           double delta = 0.0) {
  PerturbationSpec spec;
  for (std::size_t i = 0; i < ts.size(); ++i)
    spec.blocks.push_back({static_cast<int>(i)});
  spec.thresholds = ts;
  spec.delta = delta;
  return spec;
}

inline std::vector<FeatureDomain> boxes(std::initializer_list<std::pair<double, double>> bs,
                                        FeatureKind kind = FeatureKind::Continuous) {
  std::vector<FeatureDomain> ds;
  for (const auto& [lo, hi] : bs) ds.push_back({lo, hi, kind});
  return ds;
}

inline Vec random_point(Rng& rng, const std::vector<FeatureDomain>& domains) {
  Vec x(static_cast<long>(domains.size()));
  for (std::size_t i = 0; i < domains.size(); ++i) {
    const auto& d = domains[i];
    if (d.is_discrete())
      x[static_cast<long>(i)] = static_cast<double>(
          rng.integer(static_cast<long>(d.lower), static_cast<long>(d.upper)));
    else
      x[static_cast<long>(i)] = rng.real(d.lower, d.upper);
  }
  return x;
}

}  // namespace fairver::testutil
