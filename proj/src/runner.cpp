#include <fairver/runner.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include <fairver/convex_solvers.hpp>
#include <fairver/errors.hpp>

namespace fairver {

namespace {

using Json = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// JSON has no infinities; reports reuse the threshold sentinel
Json bound_json(double v) {
  if (v == kInf) return "inf";
  if (v == -kInf) return "-inf";
  return v;
}

const char* convention_name(BoundConvention c) {
  switch (c) {
    case BoundConvention::RegressionGap: return "regression_gap";
    case BoundConvention::ClassificationMargin: return "classification_margin";
    default: return "rbf_sign_margin";
  }
}

Json witness_json(const BiasInstance& inst) {
  Json w;
  w["gap"] = inst.gap;
  Json feats = Json::array();
  for (Eigen::Index i = 0; i < inst.x.size(); ++i) {
    Json f;
    f["feature"] = static_cast<int>(i);
    f["before"] = inst.x[i];
    f["after"] = inst.x_prime[i];
    feats.push_back(std::move(f));
  }
  w["features"] = std::move(feats);
  return w;
}

Json verifier_json(const VerificationOutcome& out) {
  Json v;
  v["verdict"] = out.verdict.kind_name();
  if (const auto* nb = std::get_if<NoBias>(&out.verdict.value)) {
    v["certified_bound"] = bound_json(nb->certified_bound);
    v["bound_convention"] = convention_name(nb->convention);
  } else if (const auto* b = std::get_if<Biased>(&out.verdict.value)) {
    v["witness"] = witness_json(b->instance);
  } else {
    const auto& inc = std::get<Inconclusive>(out.verdict.value);
    v["best_bound"] = bound_json(inc.best_bound);
    v["note"] = inc.note;
  }

  Json subs = Json::array();
  long nodes = 0, iterations = 0;
  int max_degree = 0;
  for (const auto& s : out.subproblems) {
    Json row;
    row["fixed"] = std::vector<double>(s.v.data(), s.v.data() + s.v.size());
    row["fixed_prime"] =
        std::vector<double>(s.v_prime.data(), s.v_prime.data() + s.v_prime.size());
    row["bound"] = bound_json(s.lower_bound);
    row["status"] =
        s.witness_valid ? "witness" : (s.lower_bound == kInf ? "vacuous" : "bounded");
    row["nodes"] = s.nodes;
    row["iterations"] = s.iterations;
    row["degree"] = s.max_degree;
    subs.push_back(std::move(row));
    nodes += s.nodes;
    iterations += s.iterations;
    max_degree = std::max(max_degree, s.max_degree);
  }
  v["subproblems"] = std::move(subs);
  v["warnings"] = out.warnings;
  v["spurious"] = out.spurious_log;
  Json stats;
  stats["nodes"] = nodes;
  stats["iterations"] = iterations;
  stats["max_degree"] = max_degree;
  v["stats"] = std::move(stats);
  return v;
}

Json tester_json(const RandomTestOutcome& out, const RandomTestConfig& cfg) {
  Json t;
  t["outcome"] = out.kind_name();
  t["samples_used"] = out.samples_used;
  t["budget"] = cfg.sample_budget;
  t["seed"] = cfg.seed;
  t["strategy"] =
      cfg.strategy == PerturbationStrategy::ProtectedFlip ? "protected_flip" : "uniform_pairs";
  if (out.instance) t["instance"] = witness_json(*out.instance);
  return t;
}

std::string json_number_text(const Json& v) {
  return v.is_string() ? v.get<std::string>() : v.dump();
}

std::string render_text(const Json& r) {
  std::ostringstream os;
  os << "scenario: " << r.value("scenario", std::string("-")) << "\n";
  os << "mode: " << r["mode"].get<std::string>() << "\n";
  if (r.contains("verifier")) {
    const Json& v = r["verifier"];
    os << "verifier: " << v["verdict"].get<std::string>();
    if (v.contains("certified_bound"))
      os << ", certified bound " << json_number_text(v["certified_bound"]) << " ("
         << v["bound_convention"].get<std::string>() << ")";
    if (v.contains("best_bound"))
      os << ", best bound " << json_number_text(v["best_bound"]) << ": "
         << v["note"].get<std::string>();
    os << "\n";
    if (v.contains("witness")) {
      const Json& w = v["witness"];
      os << "witness, output gap " << json_number_text(w["gap"]) << ":\n";
      for (const auto& f : w["features"])
        os << "  feature " << f["feature"].get<int>() << ": "
           << json_number_text(f["before"]) << " -> " << json_number_text(f["after"]) << "\n";
    }
    os << "subproblems:\n";
    int k = 0;
    for (const auto& s : v["subproblems"]) {
      os << "  [" << k++ << "] fixed " << s["fixed"].dump() << " vs "
         << s["fixed_prime"].dump() << ": bound " << json_number_text(s["bound"])
         << ", " << s["status"].get<std::string>() << ", nodes " << s["nodes"].get<long>()
         << ", iterations " << s["iterations"].get<long>();
      if (s["degree"].get<int>() > 0) os << ", degree " << s["degree"].get<int>();
      os << "\n";
    }
    for (const auto& w : v["warnings"]) os << "warning: " << w.get<std::string>() << "\n";
    for (const auto& w : v["spurious"]) os << "spurious: " << w.get<std::string>() << "\n";
  }
  if (r.contains("tester")) {
    const Json& t = r["tester"];
    os << "tester: " << t["outcome"].get<std::string>() << " after "
       << t["samples_used"].get<long>() << " of " << t["budget"].get<long>() << " samples\n";
    if (t.contains("instance")) {
      const Json& w = t["instance"];
      os << "sampled pair, output gap " << json_number_text(w["gap"]) << ":\n";
      for (const auto& f : w["features"])
        os << "  feature " << f["feature"].get<int>() << ": "
           << json_number_text(f["before"]) << " -> " << json_number_text(f["after"]) << "\n";
    }
  }
  os << "timings:";
  for (const auto& [key, val] : r["timings"].items())
    os << " " << key << " " << val.get<double>() << "s";
  os << "\n";
  return os.str();
}

}  // namespace

RunResult run_scenario(const Scenario& scenario, const RunOptions& options,
                       double parse_seconds) {
  if (options.mode != "verify" && options.mode != "test" && options.mode != "both")
    fail(ErrorCode::InvalidSpec, "mode must be verify, test, or both");
  if (options.format != "json" && options.format != "text")
    fail(ErrorCode::InvalidSpec, "format must be json or text");

  const bool want_verify = options.mode != "test";
  const bool want_test = options.mode != "verify";

  const auto t_build = Clock::now();
  VerifierConfig vc;
  vc.rbf = scenario.rbf;
  vc.sos_degree_cap = options.sos_degree_cap;
  vc.workers = options.workers;
  RandomTestConfig tc;
  tc.sample_budget = options.sample_budget;
  tc.seed = options.seed;
  tc.workers = options.workers;
  const double build_seconds = seconds_since(t_build);

  std::optional<VerificationOutcome> verified;
  double solve_seconds = 0.0;
  if (want_verify) {
    const auto t0 = Clock::now();
    verified = meta_verify(scenario.task, vc);
    solve_seconds = seconds_since(t0);
  }

  std::optional<RandomTestOutcome> tested;
  double test_seconds = 0.0;
  if (want_test) {
    const auto t0 = Clock::now();
    tested = random_test(scenario.task, tc);
    test_seconds = seconds_since(t0);
  }

  const auto t_agg = Clock::now();
  Json report;
  if (!options.scenario_path.empty()) report["scenario"] = options.scenario_path;
  report["mode"] = options.mode;
  if (verified) report["verifier"] = verifier_json(*verified);
  if (tested) report["tester"] = tester_json(*tested, tc);

  RunResult rr;
  const bool biased = (verified && verified->verdict.is_biased()) || (tested && tested->found);
  if (biased)
    rr.exit_code = 1;
  else if (verified)
    rr.exit_code = verified->verdict.is_no_bias() ? 0 : 2;
  else
    rr.exit_code = 2;  // sampling alone certifies nothing

  Json timings;
  timings["parse"] = parse_seconds;
  timings["build"] = build_seconds;
  timings["solve"] = solve_seconds;
  timings["test"] = test_seconds;
  timings["aggregate"] = seconds_since(t_agg);
  report["timings"] = std::move(timings);

  rr.report = options.format == "json" ? report.dump(2) + "\n" : render_text(report);
  return rr;
}

int run(const RunOptions& options, std::ostream& out, std::ostream& err) {
  try {
    const auto t0 = Clock::now();
    std::ifstream in(options.scenario_path);
    if (!in) {
      err << "cannot open scenario file: " << options.scenario_path << "\n";
      return 3;
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    Scenario scenario = parse_scenario(buf.str());
    const double parse_seconds = seconds_since(t0);

    RunResult rr = run_scenario(scenario, options, parse_seconds);
    out << rr.report;
    if (!options.out_path.empty()) {
      const std::string tmp = options.out_path + ".tmp";
      {
        std::ofstream of(tmp, std::ios::trunc);
        if (!of) {
          err << "cannot write report file: " << tmp << "\n";
          return 3;
        }
        of << rr.report;
      }
      if (std::rename(tmp.c_str(), options.out_path.c_str()) != 0) {
        err << "cannot move report into place: " << options.out_path << "\n";
        return 3;
      }
    }
    return rr.exit_code;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace fairver
