#include <cmath>

#include <gtest/gtest.h>

#include "fwpo/tabular.hpp"
#include "oracles.hpp"

using namespace fwpo;
using namespace fwpo::tabular;
using geometry::ConstraintSet;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs)
    v[i++] = x;
  return v;
}

// MDP whose reward depends only on the state and whose transition ignores the action.
SmoothMdp state_only(const Vector &r, const Matrix &P, double gamma) {
  SmoothMdp mdp;
  mdp.M = static_cast<int>(r.size());
  mdp.N = 1;
  mdp.gamma = gamma;
  mdp.reward = [r](int s, const Vector &) { return r[s]; };
  mdp.reward_grad = [](int, const Vector &) -> Vector { return Vector::Zero(1); };
  mdp.transition = [P](int s, const Vector &) -> Vector { return P.row(s).transpose(); };
  mdp.transition_grad = [m = mdp.M](int, const Vector &) -> Matrix { return Matrix::Zero(m, 1); };
  for (int s = 0; s < mdp.M; ++s)
    mdp.constraints.push_back(ConstraintSet::box(vec({-1}), vec({1})));
  mdp.mu = Vector::Constant(mdp.M, 1.0 / mdp.M);
  return mdp;
}

SmoothMdp tuned_synthetic() {
  SmoothMdp mdp = synthetic_mdp(0, 0.9);
  Rng rng(1);
  mdp.L = estimate_smoothness(mdp, rng, 300);
  return mdp;
}

} // namespace

TEST(TransitionMatrix, SingleState) {
  const auto mdp = state_only(vec({0.5}), Matrix::Ones(1, 1), 0.9);
  EXPECT_EQ(transition_matrix(mdp, anchor_policy(mdp)), Matrix::Ones(1, 1));
}

TEST(TransitionMatrix, DeterministicCycle) {
  Matrix P(3, 3);
  P << 0, 1, 0, 0, 0, 1, 1, 0, 0;
  const auto mdp = state_only(vec({0, 0, 0}), P, 0.9);
  EXPECT_EQ(transition_matrix(mdp, anchor_policy(mdp)), P);
}

TEST(TransitionMatrix, SyntheticRowsStochastic) {
  const auto mdp = synthetic_mdp();
  const Matrix P = transition_matrix(mdp, anchor_policy(mdp));
  for (int s = 0; s < mdp.M; ++s)
    EXPECT_NEAR(P.row(s).sum(), 1.0, 1e-10);
  EXPECT_GE(P.minCoeff(), 0.0);
}

TEST(ExactV, ClosedForms) {
  const auto one = state_only(vec({0.5}), Matrix::Ones(1, 1), 0.9);
  EXPECT_NEAR(exact_v(one, anchor_policy(one))[0], 5.0, 1e-12);
  EXPECT_NEAR(objective(one, anchor_policy(one)), 5.0, 1e-12);

  const auto top = state_only(vec({1.0}), Matrix::Ones(1, 1), 0.75);
  EXPECT_NEAR(exact_v(top, anchor_policy(top))[0], 4.0, 1e-12);

  const auto chain = state_only(vec({1, 0}), Matrix::Identity(2, 2), 0.5);
  const Vector v = exact_v(chain, anchor_policy(chain));
  EXPECT_NEAR(v[0], 2.0, 1e-12);
  EXPECT_NEAR(v[1], 0.0, 1e-12);
  EXPECT_NEAR(objective(chain, anchor_policy(chain)), 1.0, 1e-12);
}

TEST(ExactV, BellmanResidualAndRange) {
  const auto mdp = synthetic_mdp(4);
  const auto pi = anchor_policy(mdp);
  const Vector v = exact_v(mdp, pi);
  const Vector resid = v - reward_vector(mdp, pi) - mdp.gamma * transition_matrix(mdp, pi) * v;
  EXPECT_LE(resid.lpNorm<Eigen::Infinity>(), 1e-9);
  EXPECT_GE(v.minCoeff(), 0.0);
  EXPECT_LE(v.maxCoeff(), 1.0 / (1.0 - mdp.gamma));
}

TEST(SyntheticMdp, AnalyticGradientsMatchFiniteDifferences) {
  const auto mdp = synthetic_mdp(2);
  Rng rng(9);
  std::normal_distribution<double> n01;
  for (int t = 0; t < 20; ++t)
    for (int s = 0; s < mdp.M; ++s) {
      const Vector a = geometry::lmo(mdp.constraints[s], vec({n01(rng), n01(rng)})) * 0.7;
      const Vector fd_r =
          oracle::fd_gradient([&](const Vector &x) { return mdp.reward(s, x); }, a);
      const Vector gr = mdp.reward_grad(s, a);
      for (int i = 0; i < mdp.N; ++i)
        EXPECT_LT(oracle::rel_err(gr[i], fd_r[i]), 1e-4);
      const Matrix gp = mdp.transition_grad(s, a);
      for (int j = 0; j < mdp.M; ++j) {
        const Vector fd_p =
            oracle::fd_gradient([&](const Vector &x) { return mdp.transition(s, x)[j]; }, a);
        for (int i = 0; i < mdp.N; ++i)
          EXPECT_LT(oracle::rel_err(gp(j, i), fd_p[i]), 1e-4);
      }
      const double r = mdp.reward(s, a);
      EXPECT_GE(r, 0.0);
      EXPECT_LE(r, 1.0);
    }
}

TEST(ExactQGrad, MatchesFiniteDifferenceOfOneStepLookahead) {
  const auto mdp = synthetic_mdp(0);
  const auto pi = anchor_policy(mdp);
  const Vector v = exact_v(mdp, pi);
  for (int s = 0; s < mdp.M; ++s) {
    const Vector g = exact_q_grad(mdp, pi, s);
    const Vector fd = oracle::fd_gradient(
        [&](const Vector &a) { return q_value(mdp, v, s, a); }, pi.action(s));
    for (int i = 0; i < mdp.N; ++i)
      EXPECT_LT(oracle::rel_err(g[i], fd[i]), 1e-4);
  }
}

TEST(ExactQGrad, BanditStationaryPointAndActionFreeMdp) {
  const auto box = ConstraintSet::box(vec({-1, -1}), vec({1, 1}));
  const Vector star = vec({0.3, -0.2});
  const auto bandit = quadratic_bandit(box, star, 8.0, 0.5);
  TabularPolicy pi{star.transpose()};
  EXPECT_EQ(exact_q_grad(bandit, pi, 0), Vector::Zero(2));
  TabularPolicy off{vec({0.5, 0.5}).transpose()};
  EXPECT_LT((exact_q_grad(bandit, off, 0) - (-2.0 * (vec({0.5, 0.5}) - star) / 8.0)).norm(),
            1e-15);

  const auto flat = state_only(vec({1, 0}), Matrix::Identity(2, 2), 0.5);
  EXPECT_EQ(exact_q_grad(flat, anchor_policy(flat), 0), Vector::Zero(1));
}

TEST(Objective, OptimalBanditMatchesGridSearch) {
  const auto box = ConstraintSet::box(vec({-1, -1}), vec({1, 1}));
  const auto bandit = quadratic_bandit(box, vec({0.3, -0.2}), 8.0, 0.5);
  double best = -1e300;
  oracle::for_grid(vec({-1, -1}), vec({1, 1}), 0.01, [&](const Vector &a) {
    best = std::max(best, bandit.reward(0, a));
  });
  const double j = objective(bandit, TabularPolicy{vec({0.3, -0.2}).transpose()});
  EXPECT_NEAR(j, best / (1.0 - bandit.gamma), 1e-9);
}

TEST(FwpoStep, FixedPoint) {
  const auto box = ConstraintSet::box(vec({-1, -1}), vec({1, 1}));
  const auto bandit = quadratic_bandit(box, vec({0.3, -0.2}), 8.0, 0.5);
  const TabularPolicy pi{vec({0.3, -0.2}).transpose()};
  const auto step = fwpo_step(bandit, pi);
  EXPECT_EQ(step.policy.theta, pi.theta);
  EXPECT_EQ(step.diag.G, 0.0);

  const auto run = run_fwpo(bandit, pi, 1);
  ASSERT_EQ(run.history.size(), 1u);
  EXPECT_EQ(run.history[0].G, 0.0);
  EXPECT_EQ(run.policy.theta, pi.theta);
}

TEST(FwpoStep, ConvexCombinationAndFeasibility) {
  const auto mdp = tuned_synthetic();
  TabularPolicy pi = anchor_policy(mdp);
  const auto diam = state_diameters(mdp);
  for (int k = 0; k < 50; ++k) {
    const Vector v = exact_v(mdp, pi);
    const auto step = fwpo_step(mdp, pi, Exec::Serial, diam);
    for (int s = 0; s < mdp.M; ++s) {
      const Vector c = geometry::lmo(mdp.constraints[s], exact_q_grad(mdp, pi, v, s));
      const double a = step.diag.alpha[s];
      const Vector expect = (1 - a) * pi.action(s) + a * c;
      EXPECT_LE((step.policy.action(s) - expect).norm(), 1e-12);
      EXPECT_GE(step.diag.g[s], -1e-8);
      EXPECT_GE(a, 0.0);
      EXPECT_LE(a, 1.0);
    }
    EXPECT_NEAR(step.diag.G, step.diag.g.norm(), 1e-12);
    EXPECT_TRUE(feasible(mdp, step.policy, 1e-6));
    pi = step.policy;
  }
}

TEST(FwpoStep, ParallelMatchesSerialBitwise) {
  const auto mdp = tuned_synthetic();
  const auto a = run_fwpo(mdp, anchor_policy(mdp), 30, Exec::Serial);
  const auto b = run_fwpo(mdp, anchor_policy(mdp), 30, Exec::Parallel);
  EXPECT_EQ(a.policy.theta, b.policy.theta);
  for (std::size_t k = 0; k < a.history.size(); ++k) {
    EXPECT_EQ(a.history[k].g, b.history[k].g);
    EXPECT_EQ(a.history[k].J, b.history[k].J);
  }
}

TEST(RunFwpo, MonotoneAndWithinGapBound) {
  const auto mdp = tuned_synthetic();
  const auto run = run_fwpo(mdp, anchor_policy(mdp), 500);
  double sum_sq = 0.0;
  for (std::size_t k = 0; k < run.history.size(); ++k) {
    sum_sq += run.history[k].G * run.history[k].G;
    if (k > 0)
      EXPECT_GE(run.history[k].J, run.history[k - 1].J - 1e-9);
  }
  EXPECT_GE(objective(mdp, run.policy), run.history.back().J - 1e-9);
  EXPECT_LE(sum_sq, gap_bound(mdp));
}

TEST(RunFwpo, QuadraticBanditConvergesAtSqrtRate) {
  const auto box = ConstraintSet::box(vec({-1, -1}), vec({1, 1}));
  const auto bandit = quadratic_bandit(box, vec({0.3, -0.2}), 8.0, 0.5);
  const auto run = run_fwpo(bandit, anchor_policy(bandit), 500);
  double min_gap = 1e300;
  for (const auto &d : run.history)
    min_gap = std::min(min_gap, d.G);
  EXPECT_LE(min_gap, std::sqrt(gap_bound(bandit) / 500.0));
}

TEST(RunFwpo, QuadraticBanditGapBelowThreshold) {
  const auto box = ConstraintSet::box(vec({-1, -1}), vec({1, 1}));
  const Vector star = vec({0.3, -0.2});
  const auto bandit = quadratic_bandit(box, star, 8.0, 0.1);
  const auto run = run_fwpo(bandit, anchor_policy(bandit), 200);
  EXPECT_LT(run.history.back().G, 1e-3);
  EXPECT_LT((run.policy.action(0) - star).norm(), 1e-2);
}

TEST(Validate, RejectsBadMdp) {
  auto mdp = synthetic_mdp();
  mdp.gamma = 1.0;
  EXPECT_THROW(validate(mdp), std::invalid_argument);
  mdp = synthetic_mdp();
  mdp.mu = Vector::Constant(3, 0.5);
  EXPECT_THROW(validate(mdp), std::invalid_argument);
  mdp = synthetic_mdp();
  mdp.constraints.pop_back();
  EXPECT_THROW(validate(mdp), std::invalid_argument);
  EXPECT_NO_THROW(validate(synthetic_mdp()));
}
