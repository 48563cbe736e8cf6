#pragma once

#include <functional>
#include <vector>

#include "fwpo/geometry.hpp"
#include "fwpo/rng.hpp"
#include "fwpo/types.hpp"

/// Finite-state, continuous-action MDPs with analytic action gradients,
/// exact policy evaluation, and tabular Frank-Wolfe policy optimization.
namespace fwpo::tabular {

using geometry::ConstraintSet;

struct SmoothMdp {
  int M = 0; // states
  int N = 0; // action dimension
  std::function<double(int s, const Vector &a)> reward;
  std::function<Vector(int s, const Vector &a)> reward_grad;
  /// Distribution over next states, length M.
  std::function<Vector(int s, const Vector &a)> transition;
  /// M x N Jacobian d p(s'|s,a) / d a.
  std::function<Matrix(int s, const Vector &a)> transition_grad;
  double gamma = 0.9;
  std::vector<ConstraintSet> constraints; // C(s), one per state
  Vector mu;                              // restart distribution
  double L = 1.0;                         // smoothness constant for the step size

  double mu_min() const { return mu.minCoeff(); }
};

/// Throws std::invalid_argument if sizes, gamma, mu or L are inconsistent.
void validate(const SmoothMdp &mdp);

/// theta.row(s) is the action taken in state s.
struct TabularPolicy {
  Matrix theta;

  Vector action(int s) const { return theta.row(s).transpose(); }
};

bool feasible(const SmoothMdp &mdp, const TabularPolicy &pi, double tol = geometry::kFeasTol);

/// Policy that plays the anchor/center/lo point of every C(s) (lmo at g = 0).
TabularPolicy anchor_policy(const SmoothMdp &mdp);

Matrix transition_matrix(const SmoothMdp &mdp, const TabularPolicy &pi);
Vector reward_vector(const SmoothMdp &mdp, const TabularPolicy &pi);

/// Solves (I - gamma P) V = r by LU.
Vector exact_v(const SmoothMdp &mdp, const TabularPolicy &pi);

/// Q(s, a; pi) = r(s,a) + gamma sum_s' p(s'|s,a) V(s'; pi).
double q_value(const SmoothMdp &mdp, const Vector &v, int s, const Vector &a);

/// grad_a Q(s, a; pi) at a = theta(s), given V = exact_v(pi).
Vector exact_q_grad(const SmoothMdp &mdp, const TabularPolicy &pi, const Vector &v, int s);
Vector exact_q_grad(const SmoothMdp &mdp, const TabularPolicy &pi, int s);

/// J_mu(pi) = sum_s mu(s) V(s; pi).
double objective(const SmoothMdp &mdp, const TabularPolicy &pi);

struct FwpoDiagnostics {
  Vector g;     // state-wise gaps
  Vector alpha; // state-wise step sizes
  double G = 0; // effective gap sqrt(sum_s g(s)^2)
  double J = 0; // objective of the policy the step started from
};

struct FwpoStep {
  TabularPolicy policy;
  FwpoDiagnostics diag;
};

/// One iteration of tabular FWPO with exact evaluation. `diameters` may be
/// empty, in which case diameter(C(s)) is recomputed.
FwpoStep fwpo_step(const SmoothMdp &mdp, const TabularPolicy &pi, Exec exec = Exec::Parallel,
                   const std::vector<double> &diameters = {});

struct FwpoRun {
  TabularPolicy policy; // after the last step
  std::vector<FwpoDiagnostics> history;
};

FwpoRun run_fwpo(const SmoothMdp &mdp, const TabularPolicy &pi0, int K,
                 Exec exec = Exec::Parallel);

std::vector<double> state_diameters(const SmoothMdp &mdp);

/// 2 L D_max^2 / ((1 - gamma)^3 mu_min^2), the bound on sum_k G_k^2.
double gap_bound(const SmoothMdp &mdp);

/// Conservative smoothness constant: twice the largest |directional second
/// difference| of J_mu over `samples` random feasible policies and unit
/// directions in theta-space.
double estimate_smoothness(const SmoothMdp &mdp, Rng &rng, int samples = 200, double h = 1e-4);

/// 3 states, 2-D actions. p(.|s,a) = softmax(W_s a + b_s), r(s,a) =
/// sigmoid(w_s . a + c_s); C(s) is a box, a ball and a box cut by a halfspace.
/// L is left at 1; callers set it (e.g. from estimate_smoothness).
SmoothMdp synthetic_mdp(std::uint64_t seed = 0, double gamma = 0.9);

/// Single-state bandit r(a) = 1 - ||a - a_star||^2 / c over `set`, with a
/// self-loop transition. L is the exact smoothness 2 / (c (1 - gamma)).
SmoothMdp quadratic_bandit(const ConstraintSet &set, const Vector &a_star, double c,
                           double gamma);

} // namespace fwpo::tabular
