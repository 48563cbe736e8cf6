#pragma once

#include <iosfwd>
#include <memory>

#include "fwpo/harness.hpp"

namespace fwpo::harness::detail {

/// What the training loop needs from an algorithm.
class TrainLoopLearner {
public:
  virtual ~TrainLoopLearner() = default;
  virtual agents::TrainStep train_step(envs::Environment &env, long step, Rng &explore,
                                       Rng &replay, Exec exec) = 0;
  virtual Policy policy() const = 0;
  virtual void save(std::ostream &out) const = 0;
};

/// Builds the learner for cfg; env must already be reset.
std::unique_ptr<TrainLoopLearner> make_learner(const ExperimentConfig &cfg,
                                               const envs::Environment &env, Rng &init);

/// Policy stored in a checkpoint stream of either kind.
Policy load_policy(std::istream &in);

} // namespace fwpo::harness::detail
