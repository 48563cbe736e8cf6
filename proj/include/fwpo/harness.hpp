#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "fwpo/agents.hpp"
#include "fwpo/envs.hpp"

/// Experiment orchestration: configuration, seeding, the training loop,
/// evaluation and metric files.
namespace fwpo::harness {

/// Bad configuration (unknown key, malformed value, violated invariant).
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Learner kinds: the three neural agents plus the sample-based tabular FWPO
/// for bike sharing.
enum class Learner { Nfwpo, DdpgProjection, DdpgShaping, FwpoTabular };

Learner parse_learner(const std::string &name);
const char *to_string(Learner l);

struct TabularConfig {
  double epsilon = 0.1;       // epsilon-greedy behavior policy
  int target_period = 100;    // steps between copies of the table into its target
};

struct ExperimentConfig {
  std::string env = "reacher"; // bss | netutil | reacher | power
  envs::BssConfig bss;
  envs::NetUtilConfig netutil = envs::NetUtilConfig::diamond();
  envs::PointMassConfig pointmass;

  Learner learner = Learner::Nfwpo;
  agents::AgentConfig agent;
  TabularConfig tabular;

  long total_steps = 20000;
  long eval_every = 1000;
  int eval_episodes = 10;
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};
  std::string out_dir = "runs";
  bool wall_clock = false; // record wall_ms; off keeps metrics byte-reproducible
  bool event_log = false;  // per-step events CSV
  bool checkpoint = true;
  Exec exec = Exec::Parallel;
};

/// Parses `key = value` lines ('#' starts a comment). algo.name is applied
/// first so that per-algorithm defaults can be overridden; every other key is
/// applied in file order. Throws ConfigError.
ExperimentConfig parse_config(std::istream &in);
ExperimentConfig load_config(const std::filesystem::path &path);
void validate(const ExperimentConfig &cfg);

/// All resolved settings as sorted `key = value` lines; parse_config of the
/// result reproduces the configuration.
std::map<std::string, std::string> resolved(const ExperimentConfig &cfg);
std::string to_text(const ExperimentConfig &cfg);

/// "0..4" or "0,1,2" (or a mix, "0..2,7").
std::vector<std::uint64_t> parse_seeds(const std::string &text);

std::unique_ptr<envs::Environment> make_env(const ExperimentConfig &cfg);

/// Deterministic action for the environment's current state.
using Policy = std::function<Vector(const envs::Environment &env)>;

/// Noise-free projected actor.
Policy actor_policy(const neural::DenseNet &actor);

struct EvalResult {
  double mean = 0.0;
  double std = 0.0; // population standard deviation
  std::vector<double> returns;
};

/// Runs `episodes` episodes on fresh copies of `prototype`, episode i reset
/// with seed + i.
EvalResult evaluate(const Policy &policy, const envs::Environment &prototype, int episodes,
                    std::uint64_t seed);

struct MetricsRow {
  long step = 0;
  double eval_mean_return = 0.0;
  double eval_std_return = 0.0;
  long cum_pre_violations = 0;
  double wall_ms = 0.0;
};

struct RunResult {
  std::vector<MetricsRow> rows;
  long pre_violations = 0;
  long executed_violations = 0; // executed actions outside their set; always 0
  std::filesystem::path metrics, manifest, checkpoint, events;
};

/// Metrics CSV file names for one seed inside an output directory.
std::filesystem::path metrics_path(const std::filesystem::path &dir, std::uint64_t seed);

/// One seed of training. Writes metrics, manifest and (optionally) checkpoint
/// and event log under out_dir, which is created if missing.
RunResult run_training(const ExperimentConfig &cfg, std::uint64_t seed,
                       const std::filesystem::path &out_dir);

void write_metrics(std::ostream &out, const std::vector<MetricsRow> &rows);
std::vector<MetricsRow> read_metrics(std::istream &in);

struct AggregateRow {
  long step = 0;
  double mean_return = 0.0, std_return = 0.0;         // across seeds, population std
  double mean_violations = 0.0, std_violations = 0.0;
};

/// Per-step cross-seed statistics. All runs must share the same steps.
std::vector<AggregateRow> aggregate(const std::vector<std::vector<MetricsRow>> &runs);
void write_aggregate(std::ostream &out, const std::vector<AggregateRow> &rows);

/// Mean of the last `k` evaluation means (fewer when the run is shorter).
double final_average(const std::vector<MetricsRow> &rows, int k = 10);

struct SweepResult {
  std::vector<RunResult> runs;
  std::vector<AggregateRow> aggregate;
  double final_mean = 0.0, final_std = 0.0; // final-10 averages across seeds
  std::filesystem::path aggregate_path, summary_path;
};

/// Runs every seed (independently, possibly in parallel) then aggregates.
SweepResult sweep(const ExperimentConfig &cfg, const std::vector<std::uint64_t> &seeds,
                  const std::filesystem::path &out_dir);

/// Evaluation of a saved checkpoint (neural or tabular) on cfg's environment.
EvalResult evaluate_checkpoint(const std::filesystem::path &checkpoint,
                               const ExperimentConfig &cfg, int episodes, std::uint64_t seed);

} // namespace fwpo::harness
