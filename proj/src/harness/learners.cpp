#include "learners.hpp"

#include <algorithm>
#include <cstdio>
#include <exception>
#include <istream>
#include <ostream>
#include <string>

namespace fwpo::harness::detail {

namespace {

class NeuralLearner : public TrainLoopLearner {
public:
  NeuralLearner(const agents::AgentConfig &cfg, const envs::Environment &env, Rng &init)
      : agent_(cfg, env.state_dim(), env.action_dim(), init) {}

  agents::TrainStep train_step(envs::Environment &env, long step, Rng &explore, Rng &replay,
                               Exec exec) override {
    return agent_.train_step(env, step, explore, replay, exec);
  }
  Policy policy() const override { return actor_policy(agent_.nets().actor); }
  void save(std::ostream &out) const override { agents::save_checkpoint(agent_.nets(), out); }

private:
  agents::Agent agent_;
};

// Sample-based tabular FWPO. The policy is a table indexed by the time step
// within the episode; a critic over (one-hot time, action) supplies the
// action-gradients for Frank-Wolfe updates of every table entry. The
// constraint set is taken once, from the state at construction, so the mode is
// limited to environments whose set does not depend on the state.
class TabularLearner : public TrainLoopLearner {
public:
  TabularLearner(const agents::AgentConfig &cfg, const TabularConfig &tab,
                 const envs::Environment &env, Rng &init)
      : cfg_(cfg), tab_(tab), horizon_(env.episode_length()), set_(env.constraint_of(env.state())),
        buffer_(cfg.buffer_capacity) {
    const Vector start = geometry::project(set_, Vector::Zero(env.action_dim()));
    table_ = start.replicate(1, horizon_);
    target_table_ = table_;
    std::vector<int> sizes{horizon_ + env.action_dim()};
    sizes.insert(sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
    sizes.push_back(1);
    critic_ = neural::make_net(sizes, neural::Activation::Identity, init);
    critic_target_ = critic_;
    critic_opt_ = neural::make_adam(critic_);
  }

  agents::TrainStep train_step(envs::Environment &env, long step, Rng &explore, Rng &replay,
                               Exec exec) override {
    const int t = std::min(env.t(), horizon_ - 1);
    std::uniform_real_distribution<double> u01;
    const bool warm = step < cfg_.warmup_steps;
    const Vector a = warm || u01(explore) < tab_.epsilon
                         ? agents::random_feasible_action(set_, explore)
                         : Vector(table_.col(t));
    const auto res = env.step(a);

    agents::TrainStep out;
    const bool last = t + 1 >= horizon_;
    out.transition = agents::Transition{one_hot(t), a, res.reward,
                                        last ? Vector(Vector::Zero(horizon_)) : one_hot(t + 1),
                                        res.terminal || last, false};
    out.episode_over = res.done();
    buffer_.push(out.transition);
    if (warm || buffer_.size() < static_cast<std::size_t>(cfg_.batch_size))
      return out;

    critic_update(buffer_.sample(static_cast<std::size_t>(cfg_.batch_size), replay));
    frank_wolfe_update(exec);
    neural::soft_update(critic_target_, critic_, cfg_.tau);
    if ((step - cfg_.warmup_steps) % tab_.target_period == 0)
      target_table_ = table_;
    out.trained = true;
    out.actor_updated = true;
    return out;
  }

  Policy policy() const override {
    const Matrix table = table_;
    return [table](const envs::Environment &env) -> Vector {
      return table.col(std::min<int>(env.t(), static_cast<int>(table.cols()) - 1));
    };
  }

  void save(std::ostream &out) const override {
    out << "fwpo-tabular 1\n" << table_.cols() << ' ' << table_.rows() << '\n';
    char buf[32];
    for (Eigen::Index t = 0; t < table_.cols(); ++t) {
      for (Eigen::Index i = 0; i < table_.rows(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", table_(i, t));
        out << (i ? " " : "") << buf;
      }
      out << '\n';
    }
    out << "critic\n";
    neural::save(critic_, out);
  }

private:
  Vector one_hot(int t) const {
    Vector v = Vector::Zero(horizon_);
    v[t] = 1.0;
    return v;
  }

  void critic_update(const std::vector<const agents::Transition *> &batch) {
    const int B = static_cast<int>(batch.size());
    const int N = static_cast<int>(table_.rows());
    Matrix in(horizon_ + N, B), in2(horizon_ + N, B);
    Vector r(B), live(B);
    for (int j = 0; j < B; ++j) {
      const auto &tr = *batch[j];
      in.col(j) << tr.s, tr.a;
      Vector a2 = Vector::Zero(N);
      if (!tr.done) {
        int t2 = 0;
        tr.s2.maxCoeff(&t2);
        a2 = target_table_.col(t2);
      }
      in2.col(j) << tr.s2, a2;
      r[j] = tr.r;
      live[j] = tr.done ? 0.0 : 1.0;
    }
    const Vector y =
        r + cfg_.gamma * live.cwiseProduct(neural::forward_batch(critic_target_, in2).row(0).transpose());
    const Vector err = neural::forward_batch(critic_, in).row(0).transpose() - y;
    const auto g = neural::backward_batch(critic_, in, (2.0 / B) * err.transpose());
    neural::adam_step(critic_, g, critic_opt_, cfg_.critic_lr);
  }

  void frank_wolfe_update(Exec exec) {
    const Matrix S = Matrix::Identity(horizon_, horizon_);
    const Matrix G = agents::action_gradients(critic_, S, table_);
    Matrix next = table_;
    std::exception_ptr error;
    auto one = [&](int t) {
      try {
        const Vector c = geometry::lmo(set_, G.col(t));
        next.col(t) = table_.col(t) + cfg_.fw_lr * (c - table_.col(t));
      } catch (...) {
#pragma omp critical(tabular_fw_error)
        if (!error)
          error = std::current_exception();
      }
    };
    if (exec == Exec::Serial) {
      for (int t = 0; t < horizon_; ++t)
        one(t);
    } else {
#pragma omp parallel for schedule(static)
      for (int t = 0; t < horizon_; ++t)
        one(t);
    }
    if (error)
      std::rethrow_exception(error);
    table_ = std::move(next);
  }

  agents::AgentConfig cfg_;
  TabularConfig tab_;
  int horizon_;
  geometry::ConstraintSet set_;
  Matrix table_, target_table_; // N x horizon
  neural::DenseNet critic_, critic_target_;
  neural::AdamState critic_opt_;
  agents::ReplayBuffer buffer_;
};

} // namespace

std::unique_ptr<TrainLoopLearner> make_learner(const ExperimentConfig &cfg,
                                               const envs::Environment &env, Rng &init) {
  if (cfg.learner == Learner::FwpoTabular)
    return std::make_unique<TabularLearner>(cfg.agent, cfg.tabular, env, init);
  return std::make_unique<NeuralLearner>(cfg.agent, env, init);
}

Policy load_policy(std::istream &in) {
  const auto start = in.tellg();
  std::string tag;
  in >> tag;
  if (tag == "fwpo-tabular") {
    int version = 0, horizon = 0, n = 0;
    if (!(in >> version >> horizon >> n) || version != 1 || horizon < 1 || n < 1)
      throw std::runtime_error("checkpoint: malformed tabular header");
    Matrix table(n, horizon);
    for (int t = 0; t < horizon; ++t)
      for (int i = 0; i < n; ++i)
        if (!(in >> table(i, t)))
          throw std::runtime_error("checkpoint: truncated tabular policy");
    return [table](const envs::Environment &env) -> Vector {
      return table.col(std::min<int>(env.t(), static_cast<int>(table.cols()) - 1));
    };
  }
  in.clear();
  in.seekg(start);
  return actor_policy(agents::load_checkpoint(in).actor);
}

} // namespace fwpo::harness::detail
