#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "fwpo/envs.hpp"
#include "fwpo/geometry.hpp"
#include "fwpo/neural.hpp"
#include "fwpo/rng.hpp"

/// NFWPO and the projection-based DDPG baselines, sharing replay, critic,
/// exploration and target-network machinery.
namespace fwpo::agents {

using geometry::ConstraintSet;
using neural::DenseNet;
using neural::Gradients;

enum class Algo { Nfwpo, DdpgProjection, DdpgShaping };

Algo parse_algo(const std::string &name);
const char *to_string(Algo algo);

struct Transition {
  Vector s;
  Vector a; // executed (feasible) action
  double r = 0.0;
  Vector s2;
  bool done = false; // terminal: the target drops the bootstrap term
  bool pre_violation = false;
};

class ReplayBuffer {
public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(Transition t);
  std::size_t size() const { return data_.size(); }
  std::size_t capacity() const { return capacity_; }
  const Transition &at(std::size_t i) const { return data_.at(i); }

  /// Uniform draws with replacement over the current occupancy.
  std::vector<std::size_t> sample_indices(std::size_t n, Rng &rng) const;
  std::vector<const Transition *> sample(std::size_t n, Rng &rng) const;

private:
  std::size_t capacity_;
  std::size_t next_ = 0;
  std::vector<Transition> data_;
};

struct AgentConfig {
  Algo algo = Algo::Nfwpo;
  double fw_lr = 0.05;     // alpha in the reference action x + alpha (c - x)
  double actor_lr = 1e-4;  // beta
  double critic_lr = 1e-3; // beta_c
  double tau = 0.001;
  double noise_sigma = 0.1; // standard deviation of the Gaussian exploration noise
  int batch_size = 16;
  double gamma = 0.99;
  double shaping_weight = 1.0 / 7.0;
  int warmup_steps = 10000;
  int actor_update_period = 1;
  std::size_t buffer_capacity = 10000;
  std::vector<int> hidden = {64, 64};
  neural::Activation actor_output = neural::Activation::Tanh;

  /// Defaults with the algorithm's batch size (16 for NFWPO, 64 otherwise).
  static AgentConfig defaults(Algo algo);
};

void validate(const AgentConfig &cfg);

struct ActorCritic {
  DenseNet actor, actor_target, critic, critic_target;
  neural::AdamState actor_opt, critic_opt;
};

struct Action {
  Vector executed;
  Vector pre;
  bool pre_violation = false;
};

using ConstraintOf = std::function<ConstraintSet(const Vector &state)>;

/// Noise-then-project action selection for an actor network.
Action select_action(const DenseNet &actor, const Vector &s, const ConstraintSet &set,
                     double sigma, Rng &rng);

/// Feasible action for the exploratory warmup phase: uniform on the set's
/// enclosing box, by rejection when the set is full-dimensional, otherwise
/// the projection of a uniform box point.
Vector random_feasible_action(const ConstraintSet &set, Rng &rng);

/// r - w ||pre - executed||.
double shape_reward(double r, const Vector &pre, const Vector &executed, double w);

/// grad_a Q(s, a) for each column pair of S and A; N x B.
Matrix action_gradients(const DenseNet &critic, const Matrix &S, const Matrix &A);

/// Gradient of (1/B) sum_j Q(s_j, pi(s_j)) with respect to the actor
/// parameters, the critic evaluated at the raw actor output.
Gradients dpg_gradient(const DenseNet &actor, const DenseNet &critic, const Matrix &S);

/// Gradient of scale * sum_j ||pi(s_j) - targets_j||^2 with the targets held
/// constant.
Gradients regression_gradient(const DenseNet &actor, const Matrix &S, const Matrix &targets,
                              double scale);

/// NFWPO reference actions x + alpha (lmo(grad_a Q(s, x)) - x) with
/// x = project(C(s), pi(s)). Geometry failures are rethrown with the sample
/// index.
Matrix reference_actions(const DenseNet &actor, const DenseNet &critic, const Matrix &S,
                         const std::vector<ConstraintSet> &sets, double alpha,
                         Exec exec = Exec::Parallel);

struct TrainStep {
  Transition transition;
  bool episode_over = false; // terminal or truncated
  bool trained = false;      // critic and targets updated
  bool actor_updated = false;
};

class Agent {
public:
  Agent(AgentConfig cfg, int state_dim, int action_dim, Rng &init_rng);

  const AgentConfig &config() const { return cfg_; }
  const ActorCritic &nets() const { return nets_; }
  ActorCritic &nets() { return nets_; }
  const ReplayBuffer &buffer() const { return buffer_; }
  ReplayBuffer &buffer() { return buffer_; }

  Action act(const Vector &s, const ConstraintSet &set, bool explore, Rng &rng) const;

  /// One Adam step on the mean squared TD error; returns the pre-step loss.
  double critic_update(const std::vector<const Transition *> &batch);
  /// One Adam step on sum_j ||pi(s_j) - reference_j||^2; returns the pre-step loss.
  double nfwpo_actor_update(const std::vector<const Transition *> &batch,
                            const ConstraintOf &constraint_of, Exec exec = Exec::Parallel);
  /// One Adam ascent step on the deterministic policy gradient.
  void ddpg_actor_update(const std::vector<const Transition *> &batch);
  void soft_update_targets();

  /// Interacts once with env (whose current state is used), stores the
  /// transition and trains when past warmup. Does not reset the env.
  TrainStep train_step(envs::Environment &env, long global_step, Rng &explore_rng,
                       Rng &replay_rng, Exec exec = Exec::Parallel);

private:
  AgentConfig cfg_;
  int state_dim_, action_dim_;
  ActorCritic nets_;
  ReplayBuffer buffer_;
};

/// Text checkpoint holding the four networks.
void save_checkpoint(const ActorCritic &nets, std::ostream &out);
ActorCritic load_checkpoint(std::istream &in);

} // namespace fwpo::agents
