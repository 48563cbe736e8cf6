// Serial reference kernels vs their OpenMP counterparts.
//
// Each benchmark takes the execution mode as its argument: 0 serial, 1 parallel.

#include <benchmark/benchmark.h>

#include "fwpo/agents.hpp"
#include "fwpo/envs.hpp"
#include "fwpo/tabular.hpp"

using namespace fwpo;

namespace {

Exec mode(const benchmark::State &state) { return state.range(0) ? Exec::Parallel : Exec::Serial; }

// NFWPO reference actions for a batch of reacher states: one projection, one
// critic gradient and one lmo per sample.
void BM_ReferenceActions(benchmark::State &state) {
  const int B = static_cast<int>(state.range(1));
  Rng rng(1);
  const auto actor = neural::make_net({4, 64, 64, 2}, neural::Activation::Tanh, rng, 0.5);
  const auto critic = neural::make_net({6, 64, 64, 1}, neural::Activation::Identity, rng, 1.0);
  envs::PointMass env;
  env.reset(0);
  std::normal_distribution<double> n01;
  Matrix S(4, B);
  std::vector<geometry::ConstraintSet> sets;
  for (int j = 0; j < B; ++j) {
    for (int i = 0; i < 4; ++i)
      S(i, j) = n01(rng);
    sets.push_back(env.constraint_of(S.col(j)));
  }
  const Exec exec = mode(state);
  for (auto _ : state)
    benchmark::DoNotOptimize(agents::reference_actions(actor, critic, S, sets, 0.05, exec));
  state.SetItemsProcessed(state.iterations() * B);
}
BENCHMARK(BM_ReferenceActions)->ArgsProduct({{0, 1}, {16, 64, 256}})->Unit(benchmark::kMicrosecond);

// Same with the power variant, whose set changes with the velocity.
void BM_ReferenceActionsPower(benchmark::State &state) {
  const int B = static_cast<int>(state.range(1));
  Rng rng(2);
  const auto actor = neural::make_net({4, 64, 64, 2}, neural::Activation::Tanh, rng, 0.5);
  const auto critic = neural::make_net({6, 64, 64, 1}, neural::Activation::Identity, rng, 1.0);
  envs::PointMassConfig cfg;
  cfg.variant = envs::PointMassVariant::Power;
  envs::PointMass env(cfg);
  std::normal_distribution<double> n01;
  Matrix S(4, B);
  std::vector<geometry::ConstraintSet> sets;
  for (int j = 0; j < B; ++j) {
    for (int i = 0; i < 4; ++i)
      S(i, j) = n01(rng);
    sets.push_back(env.constraint_of(S.col(j)));
  }
  const Exec exec = mode(state);
  for (auto _ : state)
    benchmark::DoNotOptimize(agents::reference_actions(actor, critic, S, sets, 0.05, exec));
  state.SetItemsProcessed(state.iterations() * B);
}
BENCHMARK(BM_ReferenceActionsPower)->ArgsProduct({{0, 1}, {64}})->Unit(benchmark::kMicrosecond);

// One tabular FWPO iteration with exact evaluation on the synthetic MDP.
void BM_FwpoStep(benchmark::State &state) {
  auto mdp = tabular::synthetic_mdp(0, 0.9);
  const auto pi = tabular::anchor_policy(mdp);
  const auto diam = tabular::state_diameters(mdp);
  const Exec exec = mode(state);
  for (auto _ : state)
    benchmark::DoNotOptimize(tabular::fwpo_step(mdp, pi, exec, diam));
}
BENCHMARK(BM_FwpoStep)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

// A full NFWPO training step (critic update, reference actions, actor update).
void BM_NfwpoTrainStep(benchmark::State &state) {
  Rng init(3), explore(4), replay(5);
  auto cfg = agents::AgentConfig::defaults(agents::Algo::Nfwpo);
  cfg.warmup_steps = 0;
  cfg.batch_size = static_cast<int>(state.range(1));
  envs::PointMass env;
  env.reset(0);
  agents::Agent agent(cfg, env.state_dim(), env.action_dim(), init);
  const Exec exec = mode(state);
  long step = 0;
  for (auto _ : state) {
    const auto ts = agent.train_step(env, step++, explore, replay, exec);
    if (ts.episode_over)
      env.reset(static_cast<std::uint64_t>(step));
  }
}
BENCHMARK(BM_NfwpoTrainStep)->ArgsProduct({{0, 1}, {16, 64}})->Unit(benchmark::kMicrosecond);

} // namespace

BENCHMARK_MAIN();
