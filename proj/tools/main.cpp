#include <iostream>

#include <CLI11.hpp>

#include <fairver/runner.hpp>

int main(int argc, char** argv) {
  CLI::App app{"individual fairness verification for linear and kernel models"};
  fairver::RunOptions opts;

  app.add_option("scenario", opts.scenario_path, "scenario JSON file")->required();
  app.add_option("--mode", opts.mode, "verify, test, or both")
      ->check(CLI::IsMember({"verify", "test", "both"}))
      ->capture_default_str();
  app.add_option("--workers", opts.workers, "worker threads")
      ->check(CLI::Range(1, 512))
      ->capture_default_str();
  app.add_option("--seed", opts.seed, "random tester seed")->capture_default_str();
  app.add_option("--budget", opts.sample_budget, "random tester sample budget")
      ->check(CLI::Range(static_cast<long>(1), static_cast<long>(100000000)))
      ->capture_default_str();
  app.add_option("--sos-dmax", opts.sos_degree_cap,
                 "ceiling on the relaxation degree (negative leaves the default)");
  app.add_option("--out", opts.out_path, "also write the report to this file");
  app.add_option("--format", opts.format, "json or text")
      ->check(CLI::IsMember({"json", "text"}))
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 3;
  }

  return fairver::run(opts, std::cout, std::cerr);
}
