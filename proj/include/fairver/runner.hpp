#pragma once

// Orchestration behind the command line: load a scenario, run the verifier
// and/or the random tester, assemble a report, map the result to an exit
// code. 0 no bias, 1 biased, 2 inconclusive, 3 usage or parse failure.

#include <cstdint>
#include <iosfwd>
#include <string>

#include <fairver/scenario.hpp>

namespace fairver {

struct RunOptions {
  std::string scenario_path;
  std::string mode = "verify";  // verify | test | both
  int workers = 1;
  std::uint64_t seed = 0;
  int sos_degree_cap = -1;  // < 0 leaves the hierarchy ceiling alone
  long sample_budget = 50000;
  std::string out_path;         // extra report copy, written atomically
  std::string format = "json";  // json | text
};

struct RunResult {
  int exit_code = 0;
  std::string report;  // rendered in the requested format
};

// Pure core: no file or stream I/O, fully deterministic apart from the
// "timings" subtree of the report. parse_seconds is folded into that subtree
// by callers that timed scenario loading themselves.
RunResult run_scenario(const Scenario& scenario, const RunOptions& options,
                       double parse_seconds = 0.0);

// Front door: reads the scenario file, prints the report to out, prints
// diagnostics to err, writes out_path if set. Never throws; failures land on
// exit code 3.
int run(const RunOptions& options, std::ostream& out, std::ostream& err);

}  // namespace fairver
