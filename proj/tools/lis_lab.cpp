#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "lis/cli.hpp"

namespace {

void add_spec_options(CLI::App& cmd, lis::cli::Options& opt) {
  cmd.add_option("spec", opt.spec.path, "kernel spec JSON file");
  cmd.add_option("--example", opt.spec.example, "builtin kernel: markov | powerlaw");
  cmd.add_option("--p01", opt.spec.p01, "markov example: f(1|0)");
  cmd.add_option("--p11", opt.spec.p11, "markov example: f(1|1)");
  cmd.add_option("--epsilon", opt.spec.epsilon, "powerlaw example: exponent epsilon in (0,1)");
  cmd.add_option("--depth", opt.spec.depth, "powerlaw example: memory depth R");
  cmd.add_option("--normalization", opt.spec.normalization, "powerlaw example: infinite | truncated");
  cmd.add_option("--out", opt.out, "write the JSON report here instead of stdout");
  cmd.add_option("--cap", opt.run.cap.max_configurations, "largest number of configurations enumerated at once");
  cmd.add_option("--seed", opt.run.seed, "run seed");
  cmd.add_option("--threads", opt.run.threads, "worker threads (default: LIS_LAB_THREADS or all cores)");
}

}  // namespace

int main(int argc, char** argv) {
  lis::cli::Options opt;
  opt.run.threads = lis::default_threads();

  CLI::App app{"Analysis, bounds and exact oracles for chains with complete connections"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(lis::kVersion));

  auto* check = app.add_subcommand("check", "Dobrushin and boundary-uniformity criteria");
  add_spec_options(*check, opt);
  check->add_option("--criterion", opt.criterion, "dobrushin | boundary | all");
  check->add_option("--horizon", opt.horizon, "horizon N for the summed variations (default R)");

  auto* bound = app.add_subcommand("bound", "memory, correlation and comparison bounds");
  bound->add_option("kind", opt.bound_kind, "memory | correlation | compare")->required();
  add_spec_options(*bound, opt);
  bound->add_option("--csv", opt.csv, "write the sweep table as CSV");
  bound->add_option("--max-n", opt.max_n, "memory: largest window [0, n]");
  bound->add_option("--past-site", opt.past_site, "memory: past site j (negative)");
  bound->add_option("--max-lag", opt.max_lag, "correlation: largest lag");
  bound->add_option("--symbol", opt.symbol, "symbol index used by indicator observables");
  bound->add_flag("--verify", opt.verify, "compare against exact oracle values");
  bound->add_option("--samples", opt.samples, "correlation: simulated steps for the empirical column");
  bound->add_option("--burn-in", opt.burn_in, "correlation: burn-in steps");
  bound->add_option("--other", opt.other.path, "compare: spec file of the second kernel");

  auto* verify = app.add_subcommand("verify", "oracle property suite");
  add_spec_options(*verify, opt);
  verify->add_option("--trials", opt.trials, "random instances per property");

  auto* simulate = app.add_subcommand("simulate", "sample a path and estimate correlations");
  add_spec_options(*simulate, opt);
  simulate->add_option("--csv", opt.csv, "write the lag table as CSV");
  simulate->add_option("--length", opt.length, "steps after burn-in");
  simulate->add_option("--max-lag", opt.max_lag, "largest lag")->default_val(5);
  simulate->add_option("--burn-in", opt.burn_in, "burn-in steps");
  simulate->add_option("--symbol", opt.symbol, "symbol index used by the indicator observable");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : lis::cli::kInputError;
  }

  return lis::cli::guarded_run([&] {
    if (*check) return lis::cli::run_check(opt);
    if (*bound) return lis::cli::run_bound(opt);
    if (*verify) return lis::cli::run_verify(opt);
    return lis::cli::run_simulate(opt);
  });
}
