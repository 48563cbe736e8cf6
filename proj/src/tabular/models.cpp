#include <cmath>

#include "fwpo/tabular.hpp"

namespace fwpo::tabular {
namespace {

Vector softmax(const Vector &z) {
  const Vector e = (z.array() - z.maxCoeff()).exp();
  return e / e.sum();
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

} // namespace

SmoothMdp synthetic_mdp(std::uint64_t seed, double gamma) {
  constexpr int M = 3;
  constexpr int N = 2;
  Rng rng(seed);
  std::normal_distribution<double> n01;
  auto gaussian = [&](int rows, int cols, double scale) {
    Matrix out(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j)
        out(i, j) = scale * n01(rng);
    return out;
  };

  std::vector<Matrix> W(M);
  std::vector<Vector> b(M), w(M);
  std::vector<double> c(M);
  for (int s = 0; s < M; ++s) {
    W[s] = gaussian(M, N, 1.0);
    b[s] = gaussian(M, 1, 0.5);
    w[s] = gaussian(N, 1, 1.0);
    c[s] = 0.5 * n01(rng);
  }

  SmoothMdp mdp;
  mdp.M = M;
  mdp.N = N;
  mdp.gamma = gamma;
  mdp.reward = [w, c](int s, const Vector &a) { return sigmoid(w[s].dot(a) + c[s]); };
  mdp.reward_grad = [w, c](int s, const Vector &a) -> Vector {
    const double y = sigmoid(w[s].dot(a) + c[s]);
    return y * (1.0 - y) * w[s];
  };
  mdp.transition = [W, b](int s, const Vector &a) -> Vector { return softmax(W[s] * a + b[s]); };
  mdp.transition_grad = [W, b](int s, const Vector &a) -> Matrix {
    // d p_j / d a = p_j (W_j - sum_k p_k W_k)
    const Vector p = softmax(W[s] * a + b[s]);
    const Eigen::RowVectorXd mean = p.transpose() * W[s];
    return p.asDiagonal() * (W[s].rowwise() - mean);
  };

  Matrix cut(1, N);
  cut << 1.0, 1.0;
  mdp.constraints = {
      ConstraintSet::box(Vector::Constant(N, -1.0), Vector::Constant(N, 1.0)),
      ConstraintSet::l2_ball(Vector::Zero(N), 1.0),
      ConstraintSet::intersection({ConstraintSet::box(Vector::Zero(N), Vector::Ones(N)),
                                   ConstraintSet::halfspaces(cut, Vector::Constant(1, 1.5))},
                                  Vector::Zero(N)),
  };
  mdp.mu = Vector::Constant(M, 1.0 / M);
  mdp.L = 1.0;
  return mdp;
}

SmoothMdp quadratic_bandit(const ConstraintSet &set, const Vector &a_star, double c,
                           double gamma) {
  SmoothMdp mdp;
  mdp.M = 1;
  mdp.N = set.dim();
  mdp.gamma = gamma;
  mdp.reward = [a_star, c](int, const Vector &a) { return 1.0 - (a - a_star).squaredNorm() / c; };
  mdp.reward_grad = [a_star, c](int, const Vector &a) -> Vector {
    return -2.0 * (a - a_star) / c;
  };
  mdp.transition = [](int, const Vector &) -> Vector { return Vector::Ones(1); };
  mdp.transition_grad = [n = mdp.N](int, const Vector &) -> Matrix { return Matrix::Zero(1, n); };
  mdp.constraints = {set};
  mdp.mu = Vector::Ones(1);
  mdp.L = 2.0 / (c * (1.0 - gamma));
  return mdp;
}

} // namespace fwpo::tabular
