#include <cmath>

#include "fwpo/envs.hpp"

namespace fwpo::envs {

void validate(const PointMassConfig &cfg) {
  if (cfg.dim < 1 || cfg.goal.size() != cfg.dim)
    throw std::invalid_argument("pointmass: goal must have dim entries");
  if (!(cfg.dt > 0.0) || cfg.friction < 0.0)
    throw std::invalid_argument("pointmass: need dt > 0 and friction >= 0");
  if (cfg.episode_length < 1 || !(cfg.start_radius >= 0.0) || !(cfg.goal_tolerance >= 0.0))
    throw std::invalid_argument("pointmass: invalid episode settings");
  if (cfg.variant == PointMassVariant::Reacher && (!(cfg.sum_bound > 0.0) || !(cfg.energy > 0.0)))
    throw std::invalid_argument("pointmass: reacher bounds must be positive");
  if (cfg.variant == PointMassVariant::Power && (!(cfg.bound > 0.0) || !(cfg.power > 0.0)))
    throw std::invalid_argument("pointmass: power bounds must be positive");
}

namespace {

ConstraintSet reacher_set(const PointMassConfig &cfg) {
  const int n = cfg.dim;
  Matrix A(2, n);
  A.row(0).setOnes();
  A.row(1).setConstant(-1.0);
  return ConstraintSet::intersection(
      {ConstraintSet::halfspaces(A, Vector::Constant(2, cfg.sum_bound)),
       ConstraintSet::l2_ball(Vector::Zero(n), std::sqrt(cfg.energy))},
      Vector::Zero(n));
}

} // namespace

PointMass::PointMass(PointMassConfig cfg)
    : cfg_((validate(cfg), std::move(cfg))), reacher_set_(reacher_set(cfg_)) {}

ConstraintSet PointMass::constraint_of(const Vector &state) const {
  if (cfg_.variant == PointMassVariant::Reacher)
    return reacher_set_;
  const int n = cfg_.dim;
  // Coordinates with zero velocity get weight zero and fall back to the box.
  return ConstraintSet::intersection(
      {ConstraintSet::box(Vector::Constant(n, -cfg_.bound), Vector::Constant(n, cfg_.bound)),
       ConstraintSet::weighted_l1(state.tail(n).cwiseAbs(), cfg_.power)},
      Vector::Zero(n));
}

Vector PointMass::reset(std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(-cfg_.start_radius, cfg_.start_radius);
  t_ = 0;
  state_ = Vector::Zero(2 * cfg_.dim);
  for (int i = 0; i < cfg_.dim; ++i)
    state_[i] = u(rng);
  return state_;
}

StepResult PointMass::step(const Vector &action) {
  require_feasible(action);
  const int n = cfg_.dim;
  const Vector vel = state_.tail(n) + cfg_.dt * (action - cfg_.friction * state_.tail(n));
  const Vector pos = state_.head(n) + cfg_.dt * vel;
  const double dist = (pos - cfg_.goal).norm();
  ++t_;
  state_ << pos, vel;
  const double reward = -dist - 0.01 * action.norm();
  const bool terminal = dist < cfg_.goal_tolerance;
  return StepResult{state_, reward, terminal, !terminal && t_ >= cfg_.episode_length};
}

std::unique_ptr<Environment> PointMass::clone() const { return std::make_unique<PointMass>(*this); }

} // namespace fwpo::envs
