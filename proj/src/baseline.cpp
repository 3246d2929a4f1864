#include <fairver/baseline.hpp>

#include <chrono>
#include <thread>

#include <fairver/errors.hpp>
#include <fairver/rng.hpp>

namespace fairver {

namespace {

Vec sample_point(Rng& rng, const std::vector<FeatureDomain>& ds) {
  Vec x(static_cast<Eigen::Index>(ds.size()));
  for (size_t i = 0; i < ds.size(); ++i) {
    const FeatureDomain& d = ds[i];
    if (d.is_discrete())
      x[static_cast<Eigen::Index>(i)] =
          d.lower + static_cast<double>(rng.integer(0, d.value_count() - 1));
    else
      x[static_cast<Eigen::Index>(i)] = rng.real(d.lower, d.upper);
  }
  return x;
}

struct ShardOutcome {
  bool found = false;
  BiasInstance instance;
  long local_index = 0;
};

}  // namespace

void RandomTestConfig::validate() const {
  if (sample_budget < 1) fail(ErrorCode::InvalidSpec, "sample budget must be at least 1");
  if (workers < 1) fail(ErrorCode::InvalidSpec, "worker count must be at least 1");
}

RandomTestOutcome random_test(const VerificationTask& task, const RandomTestConfig& config) {
  config.validate();
  task.validate();
  const auto t0 = std::chrono::steady_clock::now();

  const int n = feature_count(task.model);
  std::vector<char> resampled(static_cast<size_t>(n), 0);
  for (size_t b = 0; b < task.spec.blocks.size(); ++b)
    if (task.spec.thresholds[b].is_unlimited())
      for (int i : task.spec.blocks[b]) resampled[static_cast<size_t>(i)] = 1;

  const int nw = std::min<long>(config.workers, config.sample_budget);
  std::vector<long> quota(static_cast<size_t>(nw), config.sample_budget / nw);
  for (long i = 0; i < config.sample_budget % nw; ++i) ++quota[static_cast<size_t>(i)];

  std::vector<ShardOutcome> shard(static_cast<size_t>(nw));
  auto run_shard = [&](int si) {
    Rng rng(Rng::shard_seed(config.seed, static_cast<std::uint64_t>(si)));
    ShardOutcome& so = shard[static_cast<size_t>(si)];
    for (long k = 0; k < quota[static_cast<size_t>(si)]; ++k) {
      Vec x = sample_point(rng, task.domains);
      Vec xp;
      if (config.strategy == PerturbationStrategy::UniformPairs) {
        xp = sample_point(rng, task.domains);
      } else {
        xp = x;
        for (int i = 0; i < n; ++i)
          if (resampled[static_cast<size_t>(i)]) {
            const FeatureDomain& d = task.domains[static_cast<size_t>(i)];
            xp[i] = d.is_discrete()
                        ? d.lower + static_cast<double>(rng.integer(0, d.value_count() - 1))
                        : rng.real(d.lower, d.upper);
          }
      }
      if (check_bias_instance(task.model, task.domains, task.spec, task.mode, x, xp)) {
        so.found = true;
        so.instance = BiasInstance{x, xp, evaluate(task.model, x) - evaluate(task.model, xp)};
        so.local_index = k;
        break;
      }
    }
  };

  if (nw == 1) {
    run_shard(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(nw));
    for (int si = 0; si < nw; ++si) pool.emplace_back(run_shard, si);
    for (auto& t : pool) t.join();
  }

  RandomTestOutcome out;
  long offset = 0;
  for (int si = 0; si < nw; ++si) {
    if (shard[static_cast<size_t>(si)].found) {
      out.found = true;
      out.instance = shard[static_cast<size_t>(si)].instance;
      out.samples_used = offset + shard[static_cast<size_t>(si)].local_index + 1;
      break;
    }
    offset += quota[static_cast<size_t>(si)];
  }
  if (!out.found) out.samples_used = config.sample_budget;
  out.elapsed_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

}  // namespace fairver
