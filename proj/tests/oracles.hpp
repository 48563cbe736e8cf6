#pragma once

// Brute-force reference computations shared by the unit and acceptance tests.
// Deliberately independent of the library's own solvers.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Vertices of {A x <= b, E x = d}: every choice of rows whose stacked system
// has full column rank, solved and filtered for feasibility.
inline std::vector<VectorXd> polytope_vertices(const MatrixXd &A, const VectorXd &b,
                                               const MatrixXd &E, const VectorXd &d,
                                               double tol = 1e-9) {
  const int n = static_cast<int>(A.cols());
  const int m = static_cast<int>(A.rows());
  const int q = static_cast<int>(E.rows());
  std::vector<VectorXd> out;
  const int need = n - q;
  if (need < 0)
    return out;
  std::vector<int> pick(need);
  std::function<void(int, int)> rec = [&](int start, int depth) {
    if (depth == need) {
      MatrixXd M(n, n);
      VectorXd r(n);
      for (int i = 0; i < q; ++i) {
        M.row(i) = E.row(i);
        r[i] = d[i];
      }
      for (int i = 0; i < need; ++i) {
        M.row(q + i) = A.row(pick[i]);
        r[q + i] = b[pick[i]];
      }
      Eigen::ColPivHouseholderQR<MatrixXd> qr(M);
      if (qr.rank() < n)
        return;
      VectorXd x = qr.solve(r);
      if (((A * x - b).array() > tol * (1.0 + b.cwiseAbs().maxCoeff())).any())
        return;
      if (q > 0 && ((E * x - d).cwiseAbs().array() > 1e-7).any())
        return;
      out.push_back(x);
      return;
    }
    for (int i = start; i < m; ++i) {
      pick[depth] = i;
      rec(i + 1, depth + 1);
    }
  };
  rec(0, 0);
  return out;
}

inline double max_linear(const std::vector<VectorXd> &verts, const VectorXd &g) {
  double best = -std::numeric_limits<double>::infinity();
  for (const auto &v : verts)
    best = std::max(best, v.dot(g));
  return best;
}

inline double max_pairwise_distance(const std::vector<VectorXd> &pts) {
  double best = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j)
      best = std::max(best, (pts[i] - pts[j]).norm());
  return best;
}

// Calls f on every point of a regular grid with the given pitch covering
// [lo, hi] in each coordinate.
inline void for_grid(const VectorXd &lo, const VectorXd &hi, double h,
                     const std::function<void(const VectorXd &)> &f) {
  const int n = static_cast<int>(lo.size());
  std::vector<int> counts(n);
  for (int i = 0; i < n; ++i)
    counts[i] = static_cast<int>(std::floor((hi[i] - lo[i]) / h + 1e-9)) + 1;
  std::vector<int> idx(n, 0);
  VectorXd x(n);
  while (true) {
    for (int i = 0; i < n; ++i)
      x[i] = lo[i] + h * idx[i];
    f(x);
    int k = 0;
    while (k < n && ++idx[k] == counts[k])
      idx[k++] = 0;
    if (k == n)
      return;
  }
}

// Central finite-difference gradient of a scalar function.
inline VectorXd fd_gradient(const std::function<double(const VectorXd &)> &f, const VectorXd &x,
                            double h = 1e-5) {
  VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    VectorXd p = x, m = x;
    p[i] += h;
    m[i] -= h;
    g[i] = (f(p) - f(m)) / (2.0 * h);
  }
  return g;
}

// Relative error; the floor keeps near-zero pairs from dividing by noise.
inline double rel_err(double a, double b, double floor = 1e-3) {
  return std::abs(a - b) / std::max(floor, std::max(std::abs(a), std::abs(b)));
}

} // namespace oracle
