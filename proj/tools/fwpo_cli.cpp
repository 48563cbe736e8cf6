// Command-line front end: train one seed, evaluate a checkpoint, or sweep seeds.
//
// Exit codes: 0 success, 1 usage or configuration error, 2 runtime failure.

#include <cstdlib>
#include <cstdio>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "fwpo/harness.hpp"

namespace fs = std::filesystem;
using namespace fwpo;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kRuntimeError = 2;

// --out, then FWPO_OUT_DIR, then the config file.
fs::path output_dir(const std::string &flag, const harness::ExperimentConfig &cfg) {
  if (!flag.empty())
    return flag;
  if (const char *env = std::getenv("FWPO_OUT_DIR"); env && *env)
    return env;
  return cfg.out_dir;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Frank-Wolfe policy optimization: training, evaluation and seed sweeps"};
  app.require_subcommand(1);

  std::string config, out, checkpoint, env_name, seeds_text;
  std::uint64_t seed = 0;
  int episodes = 10;

  auto *train = app.add_subcommand("train", "Train one seed and write metrics, manifest, checkpoint");
  train->add_option("--config", config, "Experiment config file (key = value lines)")->required();
  train->add_option("--seed", seed, "Run seed")->default_val(0);
  train->add_option("--out", out, "Output directory (overrides FWPO_OUT_DIR and train.out_dir)");

  auto *eval = app.add_subcommand("eval", "Evaluate a checkpoint with noise-free projected actions");
  eval->add_option("--checkpoint", checkpoint, "Checkpoint written by train or sweep")->required();
  eval->add_option("--env", env_name, "Environment: bss, netutil, reacher, power")->required();
  eval->add_option("--episodes", episodes, "Number of episodes")->default_val(10)->check(CLI::PositiveNumber);
  eval->add_option("--config", config, "Config file for environment settings");
  eval->add_option("--seed", seed, "Episode i is reset with seed + i")->default_val(0);

  auto *sweep = app.add_subcommand("sweep", "Train every seed, then aggregate across seeds");
  sweep->add_option("--config", config, "Experiment config file (key = value lines)")->required();
  sweep->add_option("--seeds", seeds_text, "Seeds, e.g. 0..4 or 0,1,2 (default: train.seeds)");
  sweep->add_option("--out", out, "Output directory (overrides FWPO_OUT_DIR and train.out_dir)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    return app.exit(e) == 0 ? kOk : kConfigError;
  }

  harness::ExperimentConfig cfg;
  try {
    if (!config.empty())
      cfg = harness::load_config(config);
    if (eval->parsed()) {
      cfg.env = env_name;
      harness::validate(cfg);
    }
    if (sweep->parsed() && !seeds_text.empty())
      cfg.seeds = harness::parse_seeds(seeds_text);
  } catch (const harness::ConfigError &e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  }

  try {
    if (train->parsed()) {
      const auto dir = output_dir(out, cfg);
      const auto run = harness::run_training(cfg, seed, dir);
      std::printf("seed %llu: %zu evaluations, final return %.6g, pre-projection violations %ld\n",
                  static_cast<unsigned long long>(seed), run.rows.size(),
                  run.rows.empty() ? 0.0 : run.rows.back().eval_mean_return, run.pre_violations);
      std::printf("metrics: %s\n", run.metrics.string().c_str());
    } else if (eval->parsed()) {
      const auto res = harness::evaluate_checkpoint(checkpoint, cfg, episodes, seed);
      std::printf("mean_return = %.17g\nstd_return = %.17g\n", res.mean, res.std);
    } else {
      const auto dir = output_dir(out, cfg);
      const auto res = harness::sweep(cfg, cfg.seeds, dir);
      std::printf("%zu seeds: final-10 return %.6g +- %.6g\n", res.runs.size(), res.final_mean,
                  res.final_std);
      std::printf("aggregate: %s\n", res.aggregate_path.string().c_str());
    }
  } catch (const harness::ConfigError &e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return kOk;
}
