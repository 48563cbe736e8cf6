#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <sstream>

#include "fwpo/harness.hpp"
#include "learners.hpp"

#ifndef FWPO_VERSION
#define FWPO_VERSION "unversioned"
#endif

namespace fwpo::harness {

namespace fs = std::filesystem;

namespace {

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::ofstream open_out(const fs::path &path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw std::runtime_error("cannot write '" + path.string() + "'");
  return out;
}

void close_checked(std::ofstream &out, const fs::path &path) {
  out.close();
  if (!out)
    throw std::runtime_error("error writing '" + path.string() + "'");
}

std::string seed_tag(std::uint64_t seed) { return "seed" + std::to_string(seed); }

// Population mean and standard deviation.
std::pair<double, double> moments(const std::vector<double> &xs) {
  double mean = 0.0;
  for (double x : xs)
    mean += x;
  mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs)
    var += (x - mean) * (x - mean);
  return {mean, std::sqrt(var / static_cast<double>(xs.size()))};
}

} // namespace

Policy actor_policy(const neural::DenseNet &actor) {
  return [actor](const envs::Environment &env) { return neural::forward(actor, env.state()); };
}

EvalResult evaluate(const Policy &policy, const envs::Environment &prototype, int episodes,
                    std::uint64_t seed) {
  if (episodes < 1)
    throw std::invalid_argument("evaluate: episodes must be at least 1");
  EvalResult out;
  for (int i = 0; i < episodes; ++i) {
    auto env = prototype.clone();
    env->reset(seed + static_cast<std::uint64_t>(i));
    double ret = 0.0;
    for (;;) {
      const Vector a = geometry::project(env->constraint_of(env->state()), policy(*env));
      const auto res = env->step(a);
      ret += res.reward;
      if (res.done())
        break;
    }
    out.returns.push_back(ret);
  }
  std::tie(out.mean, out.std) = moments(out.returns);
  return out;
}

fs::path metrics_path(const fs::path &dir, std::uint64_t seed) {
  return dir / ("metrics_" + seed_tag(seed) + ".csv");
}

void write_metrics(std::ostream &out, const std::vector<MetricsRow> &rows) {
  out << "step,eval_mean_return,eval_std_return,cum_pre_violations,wall_ms\n";
  for (const auto &r : rows)
    out << r.step << ',' << fmt(r.eval_mean_return) << ',' << fmt(r.eval_std_return) << ','
        << r.cum_pre_violations << ',' << fmt(r.wall_ms) << '\n';
}

std::vector<MetricsRow> read_metrics(std::istream &in) {
  std::string line;
  if (!std::getline(in, line) ||
      line != "step,eval_mean_return,eval_std_return,cum_pre_violations,wall_ms")
    throw std::runtime_error("metrics: missing or unexpected header");
  std::vector<MetricsRow> rows;
  while (std::getline(in, line)) {
    if (line.empty())
      continue;
    MetricsRow r;
    char c1, c2, c3, c4;
    std::istringstream ls(line);
    if (!(ls >> r.step >> c1 >> r.eval_mean_return >> c2 >> r.eval_std_return >> c3 >>
          r.cum_pre_violations >> c4 >> r.wall_ms) ||
        c1 != ',' || c2 != ',' || c3 != ',' || c4 != ',')
      throw std::runtime_error("metrics: malformed row '" + line + "'");
    rows.push_back(r);
  }
  return rows;
}

RunResult run_training(const ExperimentConfig &cfg, std::uint64_t seed, const fs::path &out_dir) {
  validate(cfg);
  fs::create_directories(out_dir);
  const auto clock_start = std::chrono::steady_clock::now();

  Rng env_rng = make_stream(seed, "env");
  Rng explore = make_stream(seed, "exploration");
  Rng init = make_stream(seed, "init");
  Rng replay = make_stream(seed, "replay");

  auto env = make_env(cfg);
  const auto prototype = env->clone();
  env->reset(env_rng());
  auto learner = detail::make_learner(cfg, *env, init);

  RunResult result;
  result.metrics = metrics_path(out_dir, seed);
  result.manifest = out_dir / ("manifest_" + seed_tag(seed) + ".txt");
  std::ofstream events;
  if (cfg.event_log) {
    result.events = out_dir / ("events_" + seed_tag(seed) + ".csv");
    events = open_out(result.events);
    events << "step,pre_violation,executed_feasible,reward,episode_over\n";
  }

  for (long step = 0; step < cfg.total_steps; ++step) {
    const auto set = env->constraint_of(env->state());
    const auto ts = learner->train_step(*env, step, explore, replay, cfg.exec);
    const bool feasible = geometry::contains(set, ts.transition.a, geometry::kFeasTol);
    result.pre_violations += ts.transition.pre_violation ? 1 : 0;
    result.executed_violations += feasible ? 0 : 1;
    if (events)
      events << step << ',' << int(ts.transition.pre_violation) << ',' << int(feasible) << ','
             << fmt(ts.transition.r) << ',' << int(ts.episode_over) << '\n';
    if (ts.episode_over)
      env->reset(env_rng());
    if ((step + 1) % cfg.eval_every == 0 || step + 1 == cfg.total_steps) {
      const auto ev = evaluate(learner->policy(), *prototype, cfg.eval_episodes, seed);
      MetricsRow row{step + 1, ev.mean, ev.std, result.pre_violations, 0.0};
      if (cfg.wall_clock)
        row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                                clock_start)
                          .count();
      result.rows.push_back(row);
    }
  }
  if (events)
    close_checked(events, result.events);

  auto metrics = open_out(result.metrics);
  write_metrics(metrics, result.rows);
  close_checked(metrics, result.metrics);

  if (cfg.checkpoint) {
    result.checkpoint = out_dir / ("checkpoint_" + seed_tag(seed) + ".txt");
    auto ck = open_out(result.checkpoint);
    learner->save(ck);
    close_checked(ck, result.checkpoint);
  }

  auto manifest = open_out(result.manifest);
  manifest << "# resolved configuration and run facts\n";
  manifest << to_text(cfg);
  manifest << "run.seed = " << seed << '\n';
  manifest << "run.version = " << FWPO_VERSION << '\n';
  manifest << "run.eval_std = population\n";
  manifest << "run.eval_seeds = seed + episode index\n";
  manifest << "run.metrics = " << result.metrics.filename().string() << '\n';
  manifest << "run.pre_violations = " << result.pre_violations << '\n';
  manifest << "run.executed_violations = " << result.executed_violations << '\n';
  close_checked(manifest, result.manifest);
  return result;
}

std::vector<AggregateRow> aggregate(const std::vector<std::vector<MetricsRow>> &runs) {
  if (runs.empty())
    throw std::invalid_argument("aggregate: no runs");
  const std::size_t n = runs.front().size();
  for (const auto &r : runs)
    if (r.size() != n)
      throw std::invalid_argument("aggregate: runs have different numbers of rows");
  std::vector<AggregateRow> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> ret, vio;
    for (const auto &r : runs) {
      if (r[i].step != runs.front()[i].step)
        throw std::invalid_argument("aggregate: runs evaluate at different steps");
      ret.push_back(r[i].eval_mean_return);
      vio.push_back(static_cast<double>(r[i].cum_pre_violations));
    }
    out[i].step = runs.front()[i].step;
    std::tie(out[i].mean_return, out[i].std_return) = moments(ret);
    std::tie(out[i].mean_violations, out[i].std_violations) = moments(vio);
  }
  return out;
}

void write_aggregate(std::ostream &out, const std::vector<AggregateRow> &rows) {
  out << "step,mean_return,std_return,mean_cum_pre_violations,std_cum_pre_violations\n";
  for (const auto &r : rows)
    out << r.step << ',' << fmt(r.mean_return) << ',' << fmt(r.std_return) << ','
        << fmt(r.mean_violations) << ',' << fmt(r.std_violations) << '\n';
}

double final_average(const std::vector<MetricsRow> &rows, int k) {
  if (rows.empty())
    throw std::invalid_argument("final_average: no rows");
  const std::size_t take = std::min(rows.size(), static_cast<std::size_t>(std::max(k, 1)));
  double sum = 0.0;
  for (std::size_t i = rows.size() - take; i < rows.size(); ++i)
    sum += rows[i].eval_mean_return;
  return sum / static_cast<double>(take);
}

SweepResult sweep(const ExperimentConfig &cfg, const std::vector<std::uint64_t> &seeds,
                  const fs::path &out_dir) {
  if (seeds.empty())
    throw ConfigError("sweep: no seeds");
  validate(cfg);
  SweepResult out;
  out.runs.resize(seeds.size());
  std::vector<std::exception_ptr> errors(seeds.size());
  // Seeds are independent workers; each owns its environment, learner and streams.
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    try {
      out.runs[i] = run_training(cfg, seeds[i], out_dir);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto &e : errors)
    if (e)
      std::rethrow_exception(e);

  std::vector<std::vector<MetricsRow>> rows;
  std::vector<double> finals;
  for (const auto &r : out.runs) {
    rows.push_back(r.rows);
    finals.push_back(final_average(r.rows));
  }
  out.aggregate = aggregate(rows);
  std::tie(out.final_mean, out.final_std) = moments(finals);

  out.aggregate_path = out_dir / "aggregate.csv";
  auto agg = open_out(out.aggregate_path);
  write_aggregate(agg, out.aggregate);
  close_checked(agg, out.aggregate_path);

  out.summary_path = out_dir / "summary.txt";
  auto sum = open_out(out.summary_path);
  sum << "algo = " << to_string(cfg.learner) << '\n' << "env = " << cfg.env << '\n';
  sum << "seeds = " << seeds.size() << '\n';
  for (std::size_t i = 0; i < seeds.size(); ++i)
    sum << "final10_return.seed" << seeds[i] << " = " << fmt(finals[i]) << '\n'
        << "pre_violations.seed" << seeds[i] << " = " << out.runs[i].pre_violations << '\n';
  sum << "final10_return.mean = " << fmt(out.final_mean) << '\n';
  sum << "final10_return.std = " << fmt(out.final_std) << '\n';
  close_checked(sum, out.summary_path);
  return out;
}

EvalResult evaluate_checkpoint(const fs::path &checkpoint, const ExperimentConfig &cfg,
                               int episodes, std::uint64_t seed) {
  std::ifstream in(checkpoint);
  if (!in)
    throw std::runtime_error("cannot open checkpoint '" + checkpoint.string() + "'");
  const Policy policy = detail::load_policy(in);
  const auto env = make_env(cfg);
  return evaluate(policy, *env, episodes, seed);
}

} // namespace fwpo::harness
