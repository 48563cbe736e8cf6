#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "fwpo/geometry.hpp"
#include "fwpo/rng.hpp"
#include "fwpo/types.hpp"

/// Simulated environments whose feasible action set depends on the state.
namespace fwpo::envs {

using geometry::ConstraintSet;

/// Thrown by step() when the action is outside constraint_of(state).
class InfeasibleAction : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct StepResult {
  Vector state;
  double reward = 0.0;
  bool terminal = false;  // absorbing: no bootstrap past this transition
  bool truncated = false; // time limit reached
  bool done() const { return terminal || truncated; }
};

class Environment {
public:
  virtual ~Environment() = default;

  virtual std::string name() const = 0;
  virtual int state_dim() const = 0;
  virtual int action_dim() const = 0;
  virtual int episode_length() const = 0;
  virtual ConstraintSet constraint_of(const Vector &state) const = 0;
  virtual Vector reset(std::uint64_t seed) = 0;
  /// Requires contains(constraint_of(state()), action, 1e-6).
  virtual StepResult step(const Vector &action) = 0;
  virtual std::unique_ptr<Environment> clone() const = 0;

  const Vector &state() const { return state_; }
  int t() const { return t_; }

protected:
  void require_feasible(const Vector &action) const;

  Vector state_;
  int t_ = 0;
};

// Bike sharing ---------------------------------------------------------------

struct BssConfig {
  int n = 3;      // stations
  int m = 90;     // bikes
  int C = 35;     // station capacity
  double w_move = 0.5;
  double w_lost = 1.0;
  double w_over = 1.0;
  int d_lo = 5; // demand per ordered station pair, uniform on {d_lo..d_hi}
  int d_hi = 25;
  int episode_length = 12;
};

void validate(const BssConfig &cfg);

/// Integer allocation closest to `a` that keeps the sum at m and every entry
/// in [0, C]: floors, then +1 to the largest fractional parts (lowest index
/// first on ties).
Eigen::VectorXi largest_remainder_round(const Vector &a, int m, int C);

struct BssOutcome {
  Eigen::VectorXi next_counts;
  int moved = 0;      // bikes relocated by the allocation, 1/2 sum |alloc - prev|
  int unserved = 0;   // trip requests that found no bike
  int overflow = 0;   // sum max(0, count - C) after trips
  double reward = 0.0;
};

/// One day-period: rebalance prev_counts to alloc, then serve the ordered-pair
/// demand matrix (demand(i,j) trips from i to j). A station with fewer bikes
/// than requests serves them in proportion (largest remainder).
BssOutcome bss_settle(const BssConfig &cfg, const Eigen::VectorXi &prev_counts,
                      const Eigen::VectorXi &alloc, const Eigen::MatrixXi &demand);

/// State: n station counts followed by the last n x n demand matrix (row-major).
class BikeSharing : public Environment {
public:
  explicit BikeSharing(BssConfig cfg = {});

  std::string name() const override { return "bss"; }
  int state_dim() const override { return cfg_.n + cfg_.n * cfg_.n; }
  int action_dim() const override { return cfg_.n; }
  int episode_length() const override { return cfg_.episode_length; }
  ConstraintSet constraint_of(const Vector &state) const override;
  Vector reset(std::uint64_t seed) override;
  StepResult step(const Vector &action) override;
  std::unique_ptr<Environment> clone() const override;

  const BssConfig &config() const { return cfg_; }
  const BssOutcome &last_outcome() const { return last_; }

private:
  Vector encode(const Eigen::VectorXi &counts, const Eigen::MatrixXi &demand) const;

  BssConfig cfg_;
  ConstraintSet set_;
  Eigen::VectorXi counts_;
  BssOutcome last_;
  Rng rng_;
};

// Network utility --------------------------------------------------------------

struct Edge {
  int u = 0, v = 0;
  double capacity = 50.0;
  double base_latency = 1.0;
};

struct Flow {
  int src = 0, dst = 0;
  std::vector<std::vector<int>> paths; // edge indices
};

struct NetUtilConfig {
  int nodes = 4;
  std::vector<Edge> edges;
  std::vector<Flow> flows;
  double rate_bound = 50.0; // per (flow, path)
  double amplitude = 0.2;   // base-latency modulation 1 + amplitude sin(2 pi phase / period)
  int period = 8;
  int episode_length = 50;
  double eps = 1e-3;

  /// Four nodes, six edges, two flows with two paths each, capacity 50.
  static NetUtilConfig diamond();
};

void validate(const NetUtilConfig &cfg);

struct NetUtilOutcome {
  Vector load, latency, drop;             // per edge
  Vector flow_latency, flow_drop, flow_throughput;
  double reward = 0.0;
};

/// The reward model at a given phase. Does not require feasibility, so it
/// can also score pre-projection actions. Rates are ordered flow-major.
NetUtilOutcome netutil_evaluate(const NetUtilConfig &cfg, int phase, const Vector &rates);

/// State: sin and cos of the phase angle, then per-edge load / capacity of the
/// previous action.
class NetworkUtility : public Environment {
public:
  explicit NetworkUtility(NetUtilConfig cfg = NetUtilConfig::diamond());

  std::string name() const override { return "netutil"; }
  int state_dim() const override { return 2 + static_cast<int>(cfg_.edges.size()); }
  int action_dim() const override { return action_dim_; }
  int episode_length() const override { return cfg_.episode_length; }
  ConstraintSet constraint_of(const Vector &state) const override;
  Vector reset(std::uint64_t seed) override;
  StepResult step(const Vector &action) override;
  std::unique_ptr<Environment> clone() const override;

  const NetUtilConfig &config() const { return cfg_; }

private:
  Vector encode(const Vector &load) const;

  NetUtilConfig cfg_;
  int action_dim_ = 0;
  ConstraintSet set_;
  int phase_ = 0;
};

// Point mass -------------------------------------------------------------------

enum class PointMassVariant { Reacher, Power };

struct PointMassConfig {
  PointMassVariant variant = PointMassVariant::Reacher;
  int dim = 2;
  double dt = 1.0;
  double friction = 0.5;
  Vector goal = Vector::Zero(2);
  double start_radius = 1.0; // start position uniform in [-r, r]^dim
  int episode_length = 50;
  double goal_tolerance = 0.01;
  // Reacher-style: |sum u| <= sum_bound and ||u|| <= sqrt(energy).
  double sum_bound = 0.1;
  double energy = 0.02;
  // Power-style: |u_i| <= bound and sum |vel_i u_i| <= power.
  double bound = 1.0;
  double power = 0.5;
};

void validate(const PointMassConfig &cfg);

/// State: position followed by velocity.
class PointMass : public Environment {
public:
  explicit PointMass(PointMassConfig cfg = {});

  std::string name() const override {
    return cfg_.variant == PointMassVariant::Reacher ? "pointmass_reacher" : "pointmass_power";
  }
  int state_dim() const override { return 2 * cfg_.dim; }
  int action_dim() const override { return cfg_.dim; }
  int episode_length() const override { return cfg_.episode_length; }
  ConstraintSet constraint_of(const Vector &state) const override;
  Vector reset(std::uint64_t seed) override;
  StepResult step(const Vector &action) override;
  std::unique_ptr<Environment> clone() const override;

  const PointMassConfig &config() const { return cfg_; }

private:
  PointMassConfig cfg_;
  ConstraintSet reacher_set_;
};

} // namespace fwpo::envs
