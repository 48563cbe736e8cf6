#include <algorithm>
#include <numeric>

#include "fwpo/envs.hpp"

namespace fwpo::envs {

void Environment::require_feasible(const Vector &action) const {
  if (action.size() != action_dim())
    throw InfeasibleAction(name() + ": action has the wrong dimension");
  if (!action.allFinite() || !geometry::contains(constraint_of(state_), action, geometry::kFeasTol))
    throw InfeasibleAction(name() + ": action violates the constraint set");
}

namespace {

// Integer vector with the given total, entry i in [0, cap_i], closest to the
// real target x (which sums to `total` up to rounding): floors, then
// adjustments by fractional part, lowest index first on ties.
Eigen::VectorXi round_to_total(const Vector &x, int total, const Eigen::VectorXi &cap) {
  const int n = static_cast<int>(x.size());
  Eigen::VectorXi out(n);
  Vector frac(n);
  for (int i = 0; i < n; ++i) {
    const double xi = std::clamp(x[i], 0.0, static_cast<double>(cap[i]));
    out[i] = std::min(static_cast<int>(std::floor(xi)), cap[i]);
    frac[i] = xi - out[i];
  }
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  int rest = total - out.sum();
  if (rest > 0) {
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return frac[a] > frac[b]; });
    for (int pass = 0; rest > 0 && pass < 2; ++pass)
      for (int i : order)
        if (rest > 0 && out[i] < cap[i]) {
          ++out[i];
          --rest;
        }
  } else if (rest < 0) {
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return frac[a] < frac[b]; });
    for (int pass = 0; rest < 0 && pass < 2; ++pass)
      for (int i : order)
        if (rest < 0 && out[i] > 0) {
          --out[i];
          ++rest;
        }
  }
  return out;
}

} // namespace

void validate(const BssConfig &cfg) {
  if (cfg.n < 1 || cfg.m < 0 || cfg.C < 1)
    throw std::invalid_argument("bss: n, m, C must be positive");
  if (cfg.m > cfg.n * cfg.C)
    throw std::invalid_argument("bss: m exceeds total capacity n * C");
  if (cfg.d_lo < 0 || cfg.d_lo > cfg.d_hi)
    throw std::invalid_argument("bss: need 0 <= d_lo <= d_hi");
  if (cfg.w_move < 0 || cfg.w_lost < 0 || cfg.w_over < 0)
    throw std::invalid_argument("bss: cost weights must be nonnegative");
  if (cfg.episode_length < 1)
    throw std::invalid_argument("bss: episode_length must be positive");
}

Eigen::VectorXi largest_remainder_round(const Vector &a, int m, int C) {
  return round_to_total(a, m, Eigen::VectorXi::Constant(a.size(), C));
}

BssOutcome bss_settle(const BssConfig &cfg, const Eigen::VectorXi &prev_counts,
                      const Eigen::VectorXi &alloc, const Eigen::MatrixXi &demand) {
  const int n = cfg.n;
  BssOutcome out;
  out.moved = (alloc - prev_counts).cwiseAbs().sum() / 2;

  Eigen::VectorXi post = alloc;
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXi want = demand.row(i).transpose();
    want[i] = 0;
    const int requested = want.sum();
    Eigen::VectorXi served = want;
    if (requested > alloc[i]) {
      const Vector share = want.cast<double>() * (static_cast<double>(alloc[i]) / requested);
      served = round_to_total(share, alloc[i], want);
    }
    out.unserved += requested - served.sum();
    post[i] -= served.sum();
    for (int j = 0; j < n; ++j)
      post[j] += served[j];
  }
  for (int i = 0; i < n; ++i)
    out.overflow += std::max(0, post[i] - cfg.C);
  out.next_counts = post;
  out.reward = -(cfg.w_move * out.moved + cfg.w_lost * out.unserved + cfg.w_over * out.overflow);
  return out;
}

BikeSharing::BikeSharing(BssConfig cfg)
    : cfg_((validate(cfg), cfg)),
      set_(ConstraintSet::intersection(
          {ConstraintSet::box(Vector::Zero(cfg.n), Vector::Constant(cfg.n, cfg.C)),
           ConstraintSet::hyperplanes(Matrix::Ones(1, cfg.n), Vector::Constant(1, cfg.m))},
          Vector::Constant(cfg.n, static_cast<double>(cfg.m) / cfg.n))) {}

ConstraintSet BikeSharing::constraint_of(const Vector &) const { return set_; }

Vector BikeSharing::encode(const Eigen::VectorXi &counts, const Eigen::MatrixXi &demand) const {
  const int n = cfg_.n;
  Vector s(n + n * n);
  for (int i = 0; i < n; ++i)
    s[i] = counts[i];
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      s[n + i * n + j] = demand(i, j);
  return s;
}

Vector BikeSharing::reset(std::uint64_t seed) {
  rng_.seed(seed);
  t_ = 0;
  counts_ = largest_remainder_round(Vector::Constant(cfg_.n, static_cast<double>(cfg_.m) / cfg_.n),
                                    cfg_.m, cfg_.C);
  last_ = BssOutcome{};
  state_ = encode(counts_, Eigen::MatrixXi::Zero(cfg_.n, cfg_.n));
  return state_;
}

StepResult BikeSharing::step(const Vector &action) {
  require_feasible(action);
  const Eigen::VectorXi alloc = largest_remainder_round(action, cfg_.m, cfg_.C);
  std::uniform_int_distribution<int> demand_dist(cfg_.d_lo, cfg_.d_hi);
  Eigen::MatrixXi demand = Eigen::MatrixXi::Zero(cfg_.n, cfg_.n);
  for (int i = 0; i < cfg_.n; ++i)
    for (int j = 0; j < cfg_.n; ++j)
      if (i != j)
        demand(i, j) = demand_dist(rng_);
  last_ = bss_settle(cfg_, counts_, alloc, demand);
  counts_ = last_.next_counts;
  ++t_;
  state_ = encode(counts_, demand);
  return StepResult{state_, last_.reward, false, t_ >= cfg_.episode_length};
}

std::unique_ptr<Environment> BikeSharing::clone() const {
  return std::make_unique<BikeSharing>(*this);
}

} // namespace fwpo::envs
