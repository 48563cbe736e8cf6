#include <cmath>
#include <exception>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "fwpo/agents.hpp"

namespace fwpo::agents {

Algo parse_algo(const std::string &name) {
  if (name == "nfwpo")
    return Algo::Nfwpo;
  if (name == "ddpg_projection")
    return Algo::DdpgProjection;
  if (name == "ddpg_shaping")
    return Algo::DdpgShaping;
  throw std::invalid_argument("unknown algorithm '" + name + "'");
}

const char *to_string(Algo algo) {
  switch (algo) {
  case Algo::Nfwpo:
    return "nfwpo";
  case Algo::DdpgProjection:
    return "ddpg_projection";
  case Algo::DdpgShaping:
    return "ddpg_shaping";
  }
  return "nfwpo";
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0)
    throw std::invalid_argument("ReplayBuffer: capacity must be positive");
  data_.reserve(capacity);
}

void ReplayBuffer::push(Transition t) {
  if (data_.size() < capacity_)
    data_.push_back(std::move(t));
  else
    data_[next_] = std::move(t);
  next_ = (next_ + 1) % capacity_;
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t n, Rng &rng) const {
  if (n > data_.size())
    throw std::invalid_argument("ReplayBuffer: batch larger than occupancy");
  std::uniform_int_distribution<std::size_t> pick(0, data_.size() - 1);
  std::vector<std::size_t> idx(n);
  for (auto &i : idx)
    i = pick(rng);
  return idx;
}

std::vector<const Transition *> ReplayBuffer::sample(std::size_t n, Rng &rng) const {
  std::vector<const Transition *> out;
  out.reserve(n);
  for (std::size_t i : sample_indices(n, rng))
    out.push_back(&data_[i]);
  return out;
}

AgentConfig AgentConfig::defaults(Algo algo) {
  AgentConfig cfg;
  cfg.algo = algo;
  cfg.batch_size = algo == Algo::Nfwpo ? 16 : 64;
  return cfg;
}

void validate(const AgentConfig &cfg) {
  if (!(cfg.fw_lr > 0.0 && cfg.fw_lr <= 1.0))
    throw std::invalid_argument("agent: fw_lr must lie in (0, 1]");
  if (!(cfg.noise_sigma >= 0.0))
    throw std::invalid_argument("agent: noise_sigma must be nonnegative");
  if (cfg.batch_size < 1)
    throw std::invalid_argument("agent: batch_size must be at least 1");
  if (!(cfg.actor_lr > 0.0) || !(cfg.critic_lr > 0.0))
    throw std::invalid_argument("agent: learning rates must be positive");
  if (!(cfg.tau >= 0.0 && cfg.tau <= 1.0))
    throw std::invalid_argument("agent: tau must lie in [0, 1]");
  if (!(cfg.gamma >= 0.0 && cfg.gamma < 1.0))
    throw std::invalid_argument("agent: gamma must lie in [0, 1)");
  if (!(cfg.shaping_weight >= 0.0))
    throw std::invalid_argument("agent: shaping_weight must be nonnegative");
  if (cfg.warmup_steps < 0 || cfg.actor_update_period < 1)
    throw std::invalid_argument("agent: warmup_steps >= 0 and actor_update_period >= 1 required");
  if (cfg.buffer_capacity < static_cast<std::size_t>(cfg.batch_size))
    throw std::invalid_argument("agent: buffer_capacity must be at least batch_size");
  for (int h : cfg.hidden)
    if (h < 1)
      throw std::invalid_argument("agent: hidden sizes must be positive");
}

Action select_action(const DenseNet &actor, const Vector &s, const ConstraintSet &set,
                     double sigma, Rng &rng) {
  Action out;
  out.pre = neural::forward(actor, s);
  if (sigma > 0.0) {
    std::normal_distribution<double> noise(0.0, sigma);
    for (Eigen::Index i = 0; i < out.pre.size(); ++i)
      out.pre[i] += noise(rng);
  }
  out.pre_violation = !geometry::contains(set, out.pre, geometry::kFeasTol);
  out.executed = geometry::project(set, out.pre);
  return out;
}

namespace {

bool has_equality(const ConstraintSet &set) {
  if (set.get_if<geometry::Hyperplanes>())
    return true;
  if (const auto *x = set.get_if<geometry::Intersection>())
    for (const auto &m : x->members)
      if (has_equality(m))
        return true;
  return false;
}

} // namespace

Vector random_feasible_action(const ConstraintSet &set, Rng &rng) {
  const auto box = geometry::enclosing_box(set);
  if (!box.lo.allFinite() || !box.hi.allFinite())
    throw geometry::GeometryError(geometry::ErrorKind::Unbounded,
                                  "random_feasible_action: set is unbounded");
  std::uniform_real_distribution<double> u01;
  Vector z(set.dim());
  auto draw = [&] {
    for (int i = 0; i < set.dim(); ++i)
      z[i] = box.lo[i] + (box.hi[i] - box.lo[i]) * u01(rng);
  };
  if (!has_equality(set)) {
    for (int attempt = 0; attempt < 100; ++attempt) {
      draw();
      if (geometry::contains(set, z, 0.0))
        return z;
    }
  }
  draw();
  return geometry::project(set, z);
}

double shape_reward(double r, const Vector &pre, const Vector &executed, double w) {
  return r - w * (pre - executed).norm();
}

Matrix action_gradients(const DenseNet &critic, const Matrix &S, const Matrix &A) {
  Matrix in(S.rows() + A.rows(), S.cols());
  in << S, A;
  const auto g = neural::backward_batch(critic, in, Matrix::Ones(1, S.cols()));
  return g.input.bottomRows(A.rows());
}

Gradients dpg_gradient(const DenseNet &actor, const DenseNet &critic, const Matrix &S) {
  const Matrix A = neural::forward_batch(actor, S);
  const Matrix dq = action_gradients(critic, S, A) / static_cast<double>(S.cols());
  return neural::backward_batch(actor, S, dq);
}

Gradients regression_gradient(const DenseNet &actor, const Matrix &S, const Matrix &targets,
                              double scale) {
  const Matrix A = neural::forward_batch(actor, S);
  return neural::backward_batch(actor, S, 2.0 * scale * (A - targets));
}

Matrix reference_actions(const DenseNet &actor, const DenseNet &critic, const Matrix &S,
                         const std::vector<ConstraintSet> &sets, double alpha, Exec exec) {
  const int B = static_cast<int>(S.cols());
  const Matrix raw = neural::forward_batch(actor, S);
  Matrix X(raw.rows(), B);
  auto project_one = [&](int j) { X.col(j) = geometry::project(sets[j], raw.col(j)); };
  Matrix G;
  Matrix out(raw.rows(), B);
  auto advance_one = [&](int j) {
    const Vector c = geometry::lmo(sets[j], G.col(j));
    out.col(j) = X.col(j) + alpha * (c - X.col(j));
  };

  // Runs f over the batch, rethrowing the lowest failing index's error.
  auto for_batch = [&](auto &&f) {
    std::exception_ptr error;
    int failed = B;
    std::string what;
    geometry::ErrorKind kind = geometry::ErrorKind::NotConverged;
    Vector last;
    double residual = 0.0;
    auto run = [&](int j) {
      try {
        f(j);
      } catch (const geometry::GeometryError &e) {
#pragma omp critical(reference_actions_error)
        if (j < failed) {
          failed = j;
          kind = e.kind();
          what = e.what();
          last = e.last_iterate();
          residual = e.residual();
          error = nullptr;
        }
      } catch (...) {
#pragma omp critical(reference_actions_error)
        if (j < failed) {
          failed = j;
          error = std::current_exception();
        }
      }
    };
    if (exec == Exec::Serial) {
      for (int j = 0; j < B; ++j)
        run(j);
    } else {
#pragma omp parallel for schedule(dynamic)
      for (int j = 0; j < B; ++j)
        run(j);
    }
    if (failed < B) {
      if (error)
        std::rethrow_exception(error);
      throw geometry::GeometryError(
          kind, "reference action for batch sample " + std::to_string(failed) + ": " + what,
          last, residual);
    }
  };

  for_batch(project_one);
  G = action_gradients(critic, S, X);
  for_batch(advance_one);
  return out;
}

Agent::Agent(AgentConfig cfg, int state_dim, int action_dim, Rng &init_rng)
    : cfg_((validate(cfg), std::move(cfg))), state_dim_(state_dim), action_dim_(action_dim),
      buffer_(cfg_.buffer_capacity) {
  std::vector<int> actor_sizes{state_dim};
  actor_sizes.insert(actor_sizes.end(), cfg_.hidden.begin(), cfg_.hidden.end());
  actor_sizes.push_back(action_dim);
  std::vector<int> critic_sizes{state_dim + action_dim};
  critic_sizes.insert(critic_sizes.end(), cfg_.hidden.begin(), cfg_.hidden.end());
  critic_sizes.push_back(1);
  nets_.actor = neural::make_net(actor_sizes, cfg_.actor_output, init_rng);
  nets_.critic = neural::make_net(critic_sizes, neural::Activation::Identity, init_rng);
  nets_.actor_target = nets_.actor;
  nets_.critic_target = nets_.critic;
  nets_.actor_opt = neural::make_adam(nets_.actor);
  nets_.critic_opt = neural::make_adam(nets_.critic);
}

Action Agent::act(const Vector &s, const ConstraintSet &set, bool explore, Rng &rng) const {
  return select_action(nets_.actor, s, set, explore ? cfg_.noise_sigma : 0.0, rng);
}

namespace {

struct Batch {
  Matrix S, A, S2;
  Vector R, done;
};

Batch stack(const std::vector<const Transition *> &batch) {
  if (batch.empty())
    throw std::invalid_argument("empty batch");
  const int B = static_cast<int>(batch.size());
  Batch out{Matrix(batch[0]->s.size(), B), Matrix(batch[0]->a.size(), B),
            Matrix(batch[0]->s2.size(), B), Vector(B), Vector(B)};
  for (int j = 0; j < B; ++j) {
    out.S.col(j) = batch[j]->s;
    out.A.col(j) = batch[j]->a;
    out.S2.col(j) = batch[j]->s2;
    out.R[j] = batch[j]->r;
    out.done[j] = batch[j]->done ? 1.0 : 0.0;
  }
  return out;
}

} // namespace

double Agent::critic_update(const std::vector<const Transition *> &batch) {
  const Batch b = stack(batch);
  const int B = static_cast<int>(b.S.cols());
  // Targets use the target actor's raw output, as in the original DDPG update.
  const Matrix A2 = neural::forward_batch(nets_.actor_target, b.S2);
  Matrix in2(b.S2.rows() + A2.rows(), B);
  in2 << b.S2, A2;
  const Vector q2 = neural::forward_batch(nets_.critic_target, in2).row(0).transpose();
  const Vector y =
      b.R + cfg_.gamma * (Vector::Ones(B) - b.done).cwiseProduct(q2);

  Matrix in(b.S.rows() + b.A.rows(), B);
  in << b.S, b.A;
  const Vector q = neural::forward_batch(nets_.critic, in).row(0).transpose();
  const Vector err = q - y;
  const double loss = err.squaredNorm() / B;
  const auto g = neural::backward_batch(nets_.critic, in, (2.0 / B) * err.transpose());
  neural::adam_step(nets_.critic, g, nets_.critic_opt, cfg_.critic_lr);
  return loss;
}

double Agent::nfwpo_actor_update(const std::vector<const Transition *> &batch,
                                 const ConstraintOf &constraint_of, Exec exec) {
  const Batch b = stack(batch);
  std::vector<ConstraintSet> sets;
  sets.reserve(batch.size());
  for (const auto *t : batch)
    sets.push_back(constraint_of(t->s));
  const Matrix ref =
      reference_actions(nets_.actor, nets_.critic, b.S, sets, cfg_.fw_lr, exec);
  const double loss = (neural::forward_batch(nets_.actor, b.S) - ref).squaredNorm();
  const auto g = regression_gradient(nets_.actor, b.S, ref, 1.0);
  neural::adam_step(nets_.actor, g, nets_.actor_opt, cfg_.actor_lr);
  return loss;
}

void Agent::ddpg_actor_update(const std::vector<const Transition *> &batch) {
  const Batch b = stack(batch);
  auto g = dpg_gradient(nets_.actor, nets_.critic, b.S);
  // Ascent on J is descent on -J.
  for (auto &l : g.layers) {
    l.W = -l.W;
    l.b = -l.b;
  }
  neural::adam_step(nets_.actor, g, nets_.actor_opt, cfg_.actor_lr);
}

void Agent::soft_update_targets() {
  neural::soft_update(nets_.actor_target, nets_.actor, cfg_.tau);
  neural::soft_update(nets_.critic_target, nets_.critic, cfg_.tau);
}

TrainStep Agent::train_step(envs::Environment &env, long global_step, Rng &explore_rng,
                            Rng &replay_rng, Exec exec) {
  const Vector s = env.state();
  const ConstraintSet set = env.constraint_of(s);
  const bool warm = global_step < cfg_.warmup_steps;
  Action a;
  if (warm) {
    a.executed = random_feasible_action(set, explore_rng);
    a.pre = a.executed;
  } else {
    a = act(s, set, true, explore_rng);
  }
  const envs::StepResult res = env.step(a.executed);
  double r = res.reward;
  if (cfg_.algo == Algo::DdpgShaping)
    r = shape_reward(r, a.pre, a.executed, cfg_.shaping_weight);

  TrainStep out;
  out.transition = Transition{s, a.executed, r, res.state, res.terminal, a.pre_violation};
  out.episode_over = res.done();
  buffer_.push(out.transition);

  if (warm || buffer_.size() < static_cast<std::size_t>(cfg_.batch_size))
    return out;
  const auto batch = buffer_.sample(static_cast<std::size_t>(cfg_.batch_size), replay_rng);
  critic_update(batch);
  if ((global_step - cfg_.warmup_steps) % cfg_.actor_update_period == 0) {
    if (cfg_.algo == Algo::Nfwpo)
      nfwpo_actor_update(batch, [&env](const Vector &st) { return env.constraint_of(st); }, exec);
    else
      ddpg_actor_update(batch);
    out.actor_updated = true;
  }
  soft_update_targets();
  out.trained = true;
  return out;
}

void save_checkpoint(const ActorCritic &nets, std::ostream &out) {
  out << "fwpo-checkpoint 1\n";
  out << "actor\n";
  neural::save(nets.actor, out);
  out << "actor_target\n";
  neural::save(nets.actor_target, out);
  out << "critic\n";
  neural::save(nets.critic, out);
  out << "critic_target\n";
  neural::save(nets.critic_target, out);
}

ActorCritic load_checkpoint(std::istream &in) {
  std::string tag;
  int version = 0;
  if (!(in >> tag >> version) || tag != "fwpo-checkpoint" || version != 1)
    throw std::runtime_error("load_checkpoint: not a checkpoint file");
  ActorCritic nets;
  for (auto [name, net] : {std::pair<const char *, DenseNet *>{"actor", &nets.actor},
                           {"actor_target", &nets.actor_target},
                           {"critic", &nets.critic},
                           {"critic_target", &nets.critic_target}}) {
    if (!(in >> tag) || tag != name)
      throw std::runtime_error(std::string("load_checkpoint: expected section ") + name);
    *net = neural::load(in);
  }
  nets.actor_opt = neural::make_adam(nets.actor);
  nets.critic_opt = neural::make_adam(nets.critic);
  return nets;
}

} // namespace fwpo::agents
