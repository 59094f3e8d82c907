// fpplab command-line runner.

#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "fpplab/experiment.hpp"

namespace {

int read_config(const std::string& path, fpplab::json& out) {
  try {
    out = fpplab::load_config(path);
    return 0;
  } catch (const std::exception& e) {
    std::cerr << fpplab::json({{"status", "unparseable"}, {"errors", {std::string(e.what())}}}).dump() << '\n';
    return 2;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fpplab: first-passage percolation and random conductance experiments"};
  app.require_subcommand(1);
  int workers = fpplab::default_workers();
  std::uint64_t seed = 0;
  std::string out;
  app.add_option("--workers", workers, "Worker threads (default: FPPLAB_WORKERS or 1)")->check(CLI::PositiveNumber);
  auto* seed_opt = app.add_option("--seed", seed, "Override the config seed");
  app.add_option("--out", out, "Output directory");

  app.fallthrough();

  std::string config_path;
  auto* run = app.add_subcommand("run", "Run an experiment config");
  run->add_option("config", config_path, "Config file (JSON)")->required();
  auto* validate = app.add_subcommand("validate", "Check a config without running it");
  validate->add_option("config", config_path, "Config file (JSON)")->required();
  CLI11_PARSE(app, argc, argv);

  fpplab::json config;
  if (int rc = read_config(config_path, config)) return rc;

  if (*validate) {
    const auto errors = fpplab::validate_config(config);
    std::cout << fpplab::json({{"valid", errors.empty()}, {"errors", errors}}).dump(2) << '\n';
    return errors.empty() ? 0 : 2;
  }

  fpplab::RunOptions opt;
  opt.out_dir = out;
  opt.workers = workers;
  if (*seed_opt) opt.seed = seed;
  const auto res = fpplab::run_experiment(config, opt);
  if (res.exit_code != 0) {
    std::cerr << res.error << '\n';
    return res.exit_code;
  }
  std::cout << res.out_dir.string() << '\n';
  return 0;
}
