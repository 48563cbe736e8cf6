#include <algorithm>
#include <cmath>
#include <exception>
#include <stdexcept>

#include "fwpo/tabular.hpp"

namespace fwpo::tabular {

void validate(const SmoothMdp &mdp) {
  if (mdp.M < 1 || mdp.N < 1)
    throw std::invalid_argument("SmoothMdp: M and N must be positive");
  if (!mdp.reward || !mdp.reward_grad || !mdp.transition || !mdp.transition_grad)
    throw std::invalid_argument("SmoothMdp: reward/transition callbacks must be set");
  if (!(mdp.gamma > 0.0 && mdp.gamma < 1.0))
    throw std::invalid_argument("SmoothMdp: gamma must lie in (0, 1)");
  if (static_cast<int>(mdp.constraints.size()) != mdp.M)
    throw std::invalid_argument("SmoothMdp: need one constraint set per state");
  for (const auto &c : mdp.constraints)
    if (c.dim() != mdp.N)
      throw std::invalid_argument("SmoothMdp: constraint dimension differs from N");
  if (mdp.mu.size() != mdp.M || (mdp.mu.array() <= 0.0).any() ||
      std::abs(mdp.mu.sum() - 1.0) > 1e-10)
    throw std::invalid_argument("SmoothMdp: mu must be a positive distribution over states");
  if (!(mdp.L > 0.0))
    throw std::invalid_argument("SmoothMdp: L must be positive");
}

bool feasible(const SmoothMdp &mdp, const TabularPolicy &pi, double tol) {
  for (int s = 0; s < mdp.M; ++s)
    if (!geometry::contains(mdp.constraints[s], pi.action(s), tol))
      return false;
  return true;
}

TabularPolicy anchor_policy(const SmoothMdp &mdp) {
  TabularPolicy pi{Matrix(mdp.M, mdp.N)};
  for (int s = 0; s < mdp.M; ++s)
    pi.theta.row(s) = geometry::lmo(mdp.constraints[s], Vector::Zero(mdp.N)).transpose();
  return pi;
}

Matrix transition_matrix(const SmoothMdp &mdp, const TabularPolicy &pi) {
  Matrix P(mdp.M, mdp.M);
  for (int s = 0; s < mdp.M; ++s)
    P.row(s) = mdp.transition(s, pi.action(s)).transpose();
  return P;
}

Vector reward_vector(const SmoothMdp &mdp, const TabularPolicy &pi) {
  Vector r(mdp.M);
  for (int s = 0; s < mdp.M; ++s)
    r[s] = mdp.reward(s, pi.action(s));
  return r;
}

Vector exact_v(const SmoothMdp &mdp, const TabularPolicy &pi) {
  const Matrix P = transition_matrix(mdp, pi);
  const Vector r = reward_vector(mdp, pi);
  const Matrix A = Matrix::Identity(mdp.M, mdp.M) - mdp.gamma * P;
  Eigen::PartialPivLU<Matrix> lu(A);
  Vector v = lu.solve(r);
  if (!v.allFinite() || (A * v - r).lpNorm<Eigen::Infinity>() > 1e-9 * (1.0 + v.cwiseAbs().maxCoeff()))
    throw std::runtime_error("exact_v: (I - gamma P) is singular; transition matrix is corrupt");
  return v;
}

double q_value(const SmoothMdp &mdp, const Vector &v, int s, const Vector &a) {
  return mdp.reward(s, a) + mdp.gamma * mdp.transition(s, a).dot(v);
}

Vector exact_q_grad(const SmoothMdp &mdp, const TabularPolicy &pi, const Vector &v, int s) {
  const Vector a = pi.action(s);
  return mdp.reward_grad(s, a) + mdp.gamma * mdp.transition_grad(s, a).transpose() * v;
}

Vector exact_q_grad(const SmoothMdp &mdp, const TabularPolicy &pi, int s) {
  return exact_q_grad(mdp, pi, exact_v(mdp, pi), s);
}

double objective(const SmoothMdp &mdp, const TabularPolicy &pi) {
  return mdp.mu.dot(exact_v(mdp, pi));
}

std::vector<double> state_diameters(const SmoothMdp &mdp) {
  std::vector<double> d(mdp.M);
  for (int s = 0; s < mdp.M; ++s)
    d[s] = geometry::diameter(mdp.constraints[s]);
  return d;
}

double gap_bound(const SmoothMdp &mdp) {
  const auto d = state_diameters(mdp);
  const double dmax = *std::max_element(d.begin(), d.end());
  const double one_minus = 1.0 - mdp.gamma;
  const double mu_min = mdp.mu_min();
  return 2.0 * mdp.L * dmax * dmax / (one_minus * one_minus * one_minus * mu_min * mu_min);
}

namespace {

// Frank-Wolfe update of one state; independent across states given V.
void step_state(const SmoothMdp &mdp, const TabularPolicy &pi, const Vector &v, int s,
                double diam, TabularPolicy &out, FwpoDiagnostics &diag) {
  const Vector theta = pi.action(s);
  const Vector grad = exact_q_grad(mdp, pi, v, s);
  const Vector c = geometry::lmo(mdp.constraints[s], grad);
  const double g = (c - theta).dot(grad);
  double alpha = 0.0;
  if (diam > 0.0)
    alpha = (1.0 - mdp.gamma) * mdp.mu_min() * g / (mdp.L * diam * diam);
  alpha = std::clamp(alpha, 0.0, 1.0);
  diag.g[s] = g;
  diag.alpha[s] = alpha;
  if (alpha > 0.0)
    out.theta.row(s) = ((1.0 - alpha) * theta + alpha * c).transpose();
}

} // namespace

FwpoStep fwpo_step(const SmoothMdp &mdp, const TabularPolicy &pi, Exec exec,
                   const std::vector<double> &diameters) {
  const std::vector<double> diam = diameters.empty() ? state_diameters(mdp) : diameters;
  const Vector v = exact_v(mdp, pi);
  FwpoStep out{pi, FwpoDiagnostics{Vector::Zero(mdp.M), Vector::Zero(mdp.M), 0.0, mdp.mu.dot(v)}};

  if (exec == Exec::Serial) {
    for (int s = 0; s < mdp.M; ++s)
      step_state(mdp, pi, v, s, diam[s], out.policy, out.diag);
  } else {
    // Exceptions may not leave an OpenMP region; keep the lowest failing state's.
    std::exception_ptr error;
    int error_state = mdp.M;
#pragma omp parallel for schedule(static)
    for (int s = 0; s < mdp.M; ++s) {
      try {
        step_state(mdp, pi, v, s, diam[s], out.policy, out.diag);
      } catch (...) {
#pragma omp critical(fwpo_step_error)
        if (s < error_state) {
          error_state = s;
          error = std::current_exception();
        }
      }
    }
    if (error)
      std::rethrow_exception(error);
  }
  out.diag.G = out.diag.g.norm();
  return out;
}

FwpoRun run_fwpo(const SmoothMdp &mdp, const TabularPolicy &pi0, int K, Exec exec) {
  validate(mdp);
  if (K < 1)
    throw std::invalid_argument("run_fwpo: K must be at least 1");
  const auto diam = state_diameters(mdp);
  FwpoRun run{pi0, {}};
  run.history.reserve(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k) {
    FwpoStep step = fwpo_step(mdp, run.policy, exec, diam);
    run.policy = std::move(step.policy);
    run.history.push_back(std::move(step.diag));
  }
  return run;
}

double estimate_smoothness(const SmoothMdp &mdp, Rng &rng, int samples, double h) {
  std::normal_distribution<double> n01;
  std::uniform_real_distribution<double> u01;
  double worst = 0.0;
  for (int k = 0; k < samples; ++k) {
    // Random feasible policy: a random convex combination of two LMO points.
    TabularPolicy pi{Matrix(mdp.M, mdp.N)};
    for (int s = 0; s < mdp.M; ++s) {
      Vector g1(mdp.N), g2(mdp.N);
      for (int i = 0; i < mdp.N; ++i) {
        g1[i] = n01(rng);
        g2[i] = n01(rng);
      }
      const double t = u01(rng);
      pi.theta.row(s) = (t * geometry::lmo(mdp.constraints[s], g1) +
                         (1.0 - t) * geometry::lmo(mdp.constraints[s], g2))
                            .transpose();
    }
    Matrix dir(mdp.M, mdp.N);
    for (int s = 0; s < mdp.M; ++s)
      for (int i = 0; i < mdp.N; ++i)
        dir(s, i) = n01(rng);
    dir /= dir.norm();
    const double j0 = objective(mdp, pi);
    const double jp = objective(mdp, TabularPolicy{pi.theta + h * dir});
    const double jm = objective(mdp, TabularPolicy{pi.theta - h * dir});
    worst = std::max(worst, std::abs(jp - 2.0 * j0 + jm) / (h * h));
  }
  return 2.0 * worst;
}

} // namespace fwpo::tabular
