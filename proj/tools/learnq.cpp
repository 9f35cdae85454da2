// learnq <subcommand> [--seed N] [--reps N] [--out FILE] [--config FILE] [key=value ...]

#include "learnq/harness.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace h = learnq::harness;

int main(int argc, char** argv) {
  CLI::App app{"Simulation experiments for learning and queueing."};
  app.require_subcommand(1);

  std::uint64_t seed = 1;
  long reps = 1;
  std::string out;
  std::string config;
  std::vector<std::string> assignments;

  for (const auto& name : h::subcommands()) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--seed", seed, "Base seed");
    sub->add_option("--reps", reps, "Replications")->check(CLI::PositiveNumber);
    sub->add_option("--out", out, "Output CSV (summary goes to <stem>_summary.csv)");
    sub->add_option("--config", config, "key=value file; command-line values win");
    sub->add_option("params", assignments, "Driver parameters as key=value");
    std::string keys;
    for (const auto& k : h::known_keys(name)) keys += (keys.empty() ? "" : ", ") + k;
    sub->footer("Parameters: " + keys);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    h::ExperimentSpec spec;
    spec.subcommand = app.get_subcommands().front()->get_name();
    spec.seed = seed;
    spec.replications = reps;
    spec.out = out;
    if (!config.empty()) spec.params = h::read_config(config);
    h::ParamMap cli;
    for (const auto& a : assignments) {
      const auto eq = a.find('=');
      if (eq == std::string::npos || eq == 0) throw h::UsageError("expected key=value, got '" + a + "'");
      cli.set(a.substr(0, eq), a.substr(eq + 1));
    }
    spec.params.merge(cli);
    const auto res = h::run_experiment(spec);
    std::cout << res.csv_path << '\n' << res.summary_path << '\n';
    for (const auto& [metric, s] : res.summary) {
      std::cout << metric << " = " << h::format_double(s.mean) << " +- " << h::format_double(s.ci95) << '\n';
    }
    return 0;
  } catch (const h::UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const h::AssertionFailure& e) {
    std::cerr << "assertion failed: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << '\n';
    return 3;
  }
}
