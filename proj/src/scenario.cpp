#include <fairver/scenario.hpp>

#include <cmath>
#include <sstream>

#include <json.hpp>

#include <fairver/convex_solvers.hpp>
#include <fairver/errors.hpp>
#include <fairver/rng.hpp>

namespace fairver {

namespace {

using Json = nlohmann::ordered_json;

[[noreturn]] void parse_fail(const std::string& where, const std::string& what) {
  fail(ErrorCode::ParseError, "scenario." + where + ": " + what);
}

const Json& need(const Json& obj, const char* key, const std::string& where) {
  if (!obj.is_object()) parse_fail(where, "expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) parse_fail(where + "." + key, "missing field");
  return *it;
}

double need_number(const Json& obj, const char* key, const std::string& where) {
  const Json& v = need(obj, key, where);
  if (!v.is_number()) parse_fail(where + "." + key, "expected a number");
  return v.get<double>();
}

long need_integer(const Json& obj, const char* key, const std::string& where) {
  const Json& v = need(obj, key, where);
  if (!v.is_number_integer()) parse_fail(where + "." + key, "expected an integer");
  return v.get<long>();
}

std::string need_string(const Json& obj, const char* key, const std::string& where) {
  const Json& v = need(obj, key, where);
  if (!v.is_string()) parse_fail(where + "." + key, "expected a string");
  return v.get<std::string>();
}

Vec need_vector(const Json& obj, const char* key, const std::string& where) {
  const Json& v = need(obj, key, where);
  if (!v.is_array()) parse_fail(where + "." + key, "expected an array of numbers");
  Vec out(static_cast<Eigen::Index>(v.size()));
  for (size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number())
      parse_fail(where + "." + key + "[" + std::to_string(i) + "]", "expected a number");
    out[static_cast<Eigen::Index>(i)] = v[i].get<double>();
  }
  return out;
}

// "inf" stands in for an unlimited threshold; JSON itself has no infinity
Threshold parse_threshold(const Json& v, const std::string& where) {
  if (v.is_string()) {
    if (v.get<std::string>() == "inf") return Threshold::unlimited();
    parse_fail(where, "expected a number or \"inf\"");
  }
  if (!v.is_number()) parse_fail(where, "expected a number or \"inf\"");
  return Threshold::finite(v.get<double>());
}

Json emit_threshold(const Threshold& t) {
  return t.is_unlimited() ? Json("inf") : Json(t.value());
}

double parse_extended(const Json& v, const std::string& where) {
  if (v.is_string()) {
    if (v.get<std::string>() == "inf") return std::numeric_limits<double>::infinity();
    parse_fail(where, "expected a number or \"inf\"");
  }
  if (!v.is_number()) parse_fail(where, "expected a number or \"inf\"");
  return v.get<double>();
}

Json emit_extended(double v) {
  return std::isinf(v) ? Json("inf") : Json(v);
}

std::vector<KernelEntry> parse_entries(const Json& model, const std::string& where) {
  const Json& arr = need(model, "entries", where);
  if (!arr.is_array() || arr.empty()) parse_fail(where + ".entries", "expected a non-empty array");
  std::vector<KernelEntry> out;
  for (size_t i = 0; i < arr.size(); ++i) {
    const std::string ew = where + ".entries[" + std::to_string(i) + "]";
    KernelEntry ke;
    ke.weight = need_number(arr[i], "weight", ew);
    ke.label = need_number(arr[i], "label", ew);
    ke.sv = need_vector(arr[i], "sv", ew);
    out.push_back(std::move(ke));
  }
  return out;
}

Json emit_entries(const std::vector<KernelEntry>& entries) {
  Json arr = Json::array();
  for (const auto& ke : entries) {
    Json e;
    e["weight"] = ke.weight;
    e["label"] = ke.label;
    e["sv"] = std::vector<double>(ke.sv.data(), ke.sv.data() + ke.sv.size());
    arr.push_back(std::move(e));
  }
  return arr;
}

ModelSpec parse_model(const Json& m) {
  const std::string family = need_string(m, "family", "model");
  if (family == "linear") {
    LinearModel lm;
    lm.w = need_vector(m, "weights", "model");
    lm.b = need_number(m, "offset", "model");
    return lm;
  }
  if (family == "poly") {
    PolyKernelModel pk;
    pk.scale = need_number(m, "scale", "model");
    pk.offset = need_number(m, "offset", "model");
    pk.degree = static_cast<int>(need_integer(m, "degree", "model"));
    pk.entries = parse_entries(m, "model");
    return pk;
  }
  if (family == "rbf") {
    RbfKernelModel rm;
    rm.gamma = need_number(m, "gamma", "model");
    rm.entries = parse_entries(m, "model");
    return rm;
  }
  parse_fail("model.family", "unknown family \"" + family + "\"");
}

Json emit_model(const ModelSpec& model) {
  Json m;
  if (const auto* lm = std::get_if<LinearModel>(&model)) {
    m["family"] = "linear";
    m["weights"] = std::vector<double>(lm->w.data(), lm->w.data() + lm->w.size());
    m["offset"] = lm->b;
  } else if (const auto* pk = std::get_if<PolyKernelModel>(&model)) {
    m["family"] = "poly";
    m["scale"] = pk->scale;
    m["offset"] = pk->offset;
    m["degree"] = pk->degree;
    m["entries"] = emit_entries(pk->entries);
  } else {
    const auto& rm = std::get<RbfKernelModel>(model);
    m["family"] = "rbf";
    m["gamma"] = rm.gamma;
    m["entries"] = emit_entries(rm.entries);
  }
  return m;
}

std::vector<int> parse_index_list(const Json& obj, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end()) return {};
  if (!it->is_array()) parse_fail(key, "expected an array of feature indices");
  std::vector<int> out;
  for (size_t i = 0; i < it->size(); ++i) {
    if (!(*it)[i].is_number_integer())
      parse_fail(std::string(key) + "[" + std::to_string(i) + "]", "expected an integer");
    out.push_back((*it)[i].get<int>());
  }
  return out;
}

}  // namespace

Scenario parse_scenario(const std::string& text) {
  Json root;
  try {
    root = Json::parse(text);
  } catch (const Json::parse_error& e) {
    fail(ErrorCode::ParseError, std::string("scenario: ") + e.what());
  }
  if (!root.is_object()) parse_fail("", "top level must be an object");

  Scenario s;
  s.task.model = parse_model(need(root, "model", ""));

  const Json& doms = need(root, "domains", "");
  if (!doms.is_array() || doms.empty()) parse_fail("domains", "expected a non-empty array");
  for (size_t i = 0; i < doms.size(); ++i) {
    const std::string dw = "domains[" + std::to_string(i) + "]";
    FeatureDomain d;
    d.lower = need_number(doms[i], "lower", dw);
    d.upper = need_number(doms[i], "upper", dw);
    const std::string kind = need_string(doms[i], "kind", dw);
    if (kind == "discrete")
      d.kind = FeatureKind::Discrete;
    else if (kind == "continuous")
      d.kind = FeatureKind::Continuous;
    else
      parse_fail(dw + ".kind", "expected \"discrete\" or \"continuous\"");
    s.task.domains.push_back(d);
  }

  const Json& pert = need(root, "perturbation", "");
  const Json& blocks = need(pert, "blocks", "perturbation");
  if (!blocks.is_array()) parse_fail("perturbation.blocks", "expected an array");
  for (size_t b = 0; b < blocks.size(); ++b) {
    const std::string bw = "perturbation.blocks[" + std::to_string(b) + "]";
    if (!blocks[b].is_array()) parse_fail(bw, "expected an array of feature indices");
    std::vector<int> block;
    for (size_t i = 0; i < blocks[b].size(); ++i) {
      if (!blocks[b][i].is_number_integer())
        parse_fail(bw + "[" + std::to_string(i) + "]", "expected an integer");
      block.push_back(blocks[b][i].get<int>());
    }
    s.task.spec.blocks.push_back(std::move(block));
  }
  const Json& ths = need(pert, "thresholds", "perturbation");
  if (!ths.is_array()) parse_fail("perturbation.thresholds", "expected an array");
  for (size_t i = 0; i < ths.size(); ++i)
    s.task.spec.thresholds.push_back(
        parse_threshold(ths[i], "perturbation.thresholds[" + std::to_string(i) + "]"));
  s.task.spec.delta = need_number(pert, "delta", "perturbation");

  const std::string mode = need_string(root, "mode", "");
  if (mode == "regression")
    s.task.mode = TaskMode::Regression;
  else if (mode == "classification")
    s.task.mode = TaskMode::Classification;
  else
    parse_fail("mode", "expected \"regression\" or \"classification\"");

  s.task.fixed_set = parse_index_list(root, "fixed");
  s.task.relax_set = parse_index_list(root, "relaxed");

  if (const auto it = root.find("rbf_config"); it != root.end()) {
    s.has_rbf_overrides = true;
    s.rbf.epsilon = need_number(*it, "epsilon", "rbf_config");
    s.rbf.weight_lower =
        parse_extended(need(*it, "weight_lower", "rbf_config"), "rbf_config.weight_lower");
    s.rbf.weight_upper =
        parse_extended(need(*it, "weight_upper", "rbf_config"), "rbf_config.weight_upper");
    s.rbf.validate();
  }

  s.task.validate();
  return s;
}

std::string emit_scenario(const Scenario& scenario) {
  Json root;
  root["model"] = emit_model(scenario.task.model);

  Json doms = Json::array();
  for (const auto& d : scenario.task.domains) {
    Json dj;
    dj["lower"] = d.lower;
    dj["upper"] = d.upper;
    dj["kind"] = d.is_discrete() ? "discrete" : "continuous";
    doms.push_back(std::move(dj));
  }
  root["domains"] = std::move(doms);

  Json pert;
  pert["blocks"] = scenario.task.spec.blocks;
  Json ths = Json::array();
  for (const auto& t : scenario.task.spec.thresholds) ths.push_back(emit_threshold(t));
  pert["thresholds"] = std::move(ths);
  pert["delta"] = scenario.task.spec.delta;
  root["perturbation"] = std::move(pert);

  root["mode"] = scenario.task.mode == TaskMode::Regression ? "regression" : "classification";
  if (!scenario.task.fixed_set.empty()) root["fixed"] = scenario.task.fixed_set;
  if (!scenario.task.relax_set.empty()) root["relaxed"] = scenario.task.relax_set;

  if (scenario.has_rbf_overrides) {
    Json rc;
    rc["epsilon"] = scenario.rbf.epsilon;
    rc["weight_lower"] = emit_extended(scenario.rbf.weight_lower);
    rc["weight_upper"] = emit_extended(scenario.rbf.weight_upper);
    root["rbf_config"] = std::move(rc);
  }
  return root.dump(2) + "\n";
}

Scenario generate_scenario(ScenarioFamily family, int n, std::uint64_t seed, BiasPlan plan) {
  if (n < 2) fail(ErrorCode::InvalidSpec, "generated scenarios need at least two features");
  Rng rng(seed);

  Scenario s;
  s.task.domains.push_back({0.0, 1.0, FeatureKind::Discrete});
  for (int i = 1; i < n; ++i) s.task.domains.push_back({0.0, 1.0, FeatureKind::Continuous});
  for (int i = 0; i < n; ++i) {
    s.task.spec.blocks.push_back({i});
    s.task.spec.thresholds.push_back(i == 0 ? Threshold::unlimited() : Threshold::finite(0.0));
  }
  s.task.fixed_set = {0};

  // Small positive side weights, scaled so their sum stays well below the
  // protected contribution no matter how many features there are.
  Vec side = Vec::Zero(n);
  for (int i = 1; i < n; ++i) side[i] = rng.real(0.05, 0.15) / static_cast<double>(n - 1);
  const double side_sum = side.sum();
  const bool planted = plan == BiasPlan::Planted;

  switch (family) {
    case ScenarioFamily::Linear: {
      // planted: f(x0, mid) = x0 - 1/2 flips with the protected bit
      LinearModel lm;
      lm.w = side;
      lm.w[0] = planted ? 1.0 : 0.0;
      lm.b = -0.5 - 0.5 * side_sum;
      s.task.model = lm;
      s.task.mode = TaskMode::Classification;
      s.task.spec.delta = 0.0;
      break;
    }
    case ScenarioFamily::Poly: {
      // f(x) = (x0 + side terms)^2: the squared gap across the flip is at
      // least one; masking zeroes the protected coordinate of the vector
      PolyKernelModel pk;
      pk.scale = 1.0;
      pk.offset = 0.0;
      pk.degree = 2;
      KernelEntry ke;
      ke.weight = 1.0;
      ke.label = 1.0;
      ke.sv = side;
      ke.sv[0] = planted ? 1.0 : 0.0;
      pk.entries.push_back(std::move(ke));
      s.task.model = pk;
      s.task.mode = TaskMode::Regression;
      s.task.spec.delta = 0.3;
      break;
    }
    case ScenarioFamily::Rbf: {
      // two positive centers on the x0 = 1 side, two negative ones at x0 = 0,
      // rest coordinates jittered around the midpoint; masking moves the
      // positive centers onto the x0 = 0 plane so the sign ignores x0
      RbfKernelModel rm;
      rm.gamma = 1.0;
      const double scale = 0.02 / std::sqrt(static_cast<double>(n - 1));
      auto center = [&](double x0) {
        Vec c(n);
        c[0] = x0;
        for (int i = 1; i < n; ++i) c[i] = 0.5 + rng.real(-scale, scale);
        return c;
      };
      const double pos = planted ? 1.0 : 0.0;
      rm.entries.push_back({0.5, 1.0, center(pos)});
      rm.entries.push_back({0.5, 1.0, center(pos)});
      rm.entries.push_back({0.5, -1.0, center(0.0)});
      rm.entries.push_back({0.5, -1.0, center(0.0)});
      s.task.model = rm;
      s.task.mode = TaskMode::Classification;
      s.task.spec.delta = 0.0;
      break;
    }
  }
  s.task.validate();
  return s;
}

OracleResult brute_force_oracle(const VerificationTask& task, int grid_density) {
  task.validate();
  if (grid_density < 1) fail(ErrorCode::InvalidSpec, "grid density must be at least 1");
  const int n = feature_count(task.model);
  const auto thr = task.spec.per_feature(n);

  std::vector<std::vector<double>> values(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    const FeatureDomain& d = task.domains[static_cast<size_t>(i)];
    auto& vals = values[static_cast<size_t>(i)];
    if (d.is_discrete()) {
      for (double v = d.lower; v <= d.upper + 0.5; v += 1.0) vals.push_back(v);
    } else if (d.upper == d.lower || grid_density == 1) {
      vals.push_back(0.5 * (d.lower + d.upper));
    } else {
      const double step = (d.upper - d.lower) / static_cast<double>(grid_density - 1);
      for (int k = 0; k < grid_density; ++k)
        vals.push_back(d.lower + step * static_cast<double>(k));
    }
  }

  // per-feature lists of close value index pairs
  std::vector<std::vector<std::pair<int, int>>> close(static_cast<size_t>(n));
  long double total = 1.0L;
  for (int i = 0; i < n; ++i) {
    const auto& vals = values[static_cast<size_t>(i)];
    auto& cp = close[static_cast<size_t>(i)];
    for (size_t a = 0; a < vals.size(); ++a)
      for (size_t b = 0; b < vals.size(); ++b) {
        const double gap = std::abs(vals[a] - vals[b]);
        if (thr[static_cast<size_t>(i)].is_unlimited() ||
            gap <= thr[static_cast<size_t>(i)].value() + 1e-9)
          cp.push_back({static_cast<int>(a), static_cast<int>(b)});
      }
    total *= static_cast<long double>(cp.size());
    if (total > 1e7L) {
      std::ostringstream os;
      os << "oracle enumeration needs " << static_cast<double>(total)
         << " pairs, above the 10000000 guard";
      fail(ErrorCode::SizeExceeded, os.str());
    }
  }

  OracleResult out;
  out.min_gap = kInf;
  std::vector<size_t> idx(static_cast<size_t>(n), 0);
  Vec x(n), xp(n);
  while (true) {
    for (int i = 0; i < n; ++i) {
      const auto& pr = close[static_cast<size_t>(i)][idx[static_cast<size_t>(i)]];
      x[i] = values[static_cast<size_t>(i)][static_cast<size_t>(pr.first)];
      xp[i] = values[static_cast<size_t>(i)][static_cast<size_t>(pr.second)];
    }
    ++out.pairs_checked;
    const double fx = evaluate(task.model, x);
    const double fxp = evaluate(task.model, xp);
    const double gap = fx - fxp;
    if (gap < out.min_gap) {
      out.min_gap = gap;
      out.x = x;
      out.x_prime = xp;
    }
    if (!out.bias_found &&
        check_bias_instance(task.model, task.domains, task.spec, task.mode, x, xp)) {
      out.bias_found = true;
      out.instance = BiasInstance{x, xp, gap};
    }

    int i = 0;
    while (i < n &&
           ++idx[static_cast<size_t>(i)] == close[static_cast<size_t>(i)].size())
      idx[static_cast<size_t>(i++)] = 0;
    if (i == n) break;
  }
  return out;
}

}  // namespace fairver
