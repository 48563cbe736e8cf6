#include "fwpo/simplex.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "fwpo/geometry.hpp"

namespace fwpo::geometry {
namespace {

// Tableau in canonical form with respect to `basis`: rows hold constraint
// coefficients, the last column holds the right-hand side.
struct Tableau {
  Matrix T;
  std::vector<int> basis;
  int cols = 0; // variable columns (excludes rhs)

  double rhs(int i) const { return T(i, cols); }

  void pivot(int row, int col) {
    T.row(row) /= T(row, col);
    for (int i = 0; i < T.rows(); ++i) {
      if (i == row)
        continue;
      const double f = T(i, col);
      if (f != 0.0)
        T.row(i) -= f * T.row(row);
    }
    basis[row] = col;
  }

  void drop_row(int row) {
    const int n = static_cast<int>(T.rows());
    Matrix next(n - 1, T.cols());
    for (int i = 0, k = 0; i < n; ++i)
      if (i != row)
        next.row(k++) = T.row(i);
    T = std::move(next);
    basis.erase(basis.begin() + row);
  }
};

enum class RunStatus { Optimal, Unbounded, IterationLimit };

// Maximizes cost . x over the tableau's polyhedron with Bland's rule.
// Columns with allowed[j] == false never enter.
RunStatus run(Tableau &tab, const Vector &cost, const std::vector<bool> &allowed,
              const SimplexOptions &opt, int &iterations) {
  const double rc_tol = opt.pivot_tol * std::max(1.0, cost.cwiseAbs().maxCoeff());
  const int m = static_cast<int>(tab.T.rows());
  std::vector<bool> is_basic(tab.cols, false);
  for (int j : tab.basis)
    is_basic[j] = true;

  for (; iterations < opt.max_iterations; ++iterations) {
    int enter = -1;
    for (int j = 0; j < tab.cols; ++j) {
      if (!allowed[j] || is_basic[j])
        continue;
      double rc = cost[j];
      for (int i = 0; i < m; ++i)
        rc -= cost[tab.basis[i]] * tab.T(i, j);
      if (rc > rc_tol) {
        enter = j;
        break;
      }
    }
    if (enter < 0)
      return RunStatus::Optimal;

    int leave = -1;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < m; ++i) {
      const double a = tab.T(i, enter);
      if (a <= opt.pivot_tol)
        continue;
      const double ratio = tab.rhs(i) / a;
      if (leave < 0) {
        best = ratio;
        leave = i;
        continue;
      }
      const double slack = 1e-12 * std::max(1.0, std::abs(best));
      if (ratio < best - slack) {
        best = ratio;
        leave = i;
      } else if (ratio <= best + slack && tab.basis[i] < tab.basis[leave]) {
        best = std::min(best, ratio);
        leave = i;
      }
    }
    if (leave < 0)
      return RunStatus::Unbounded;

    is_basic[tab.basis[leave]] = false;
    is_basic[enter] = true;
    tab.pivot(leave, enter);
  }
  return RunStatus::IterationLimit;
}

} // namespace

Vector simplex_solve(const Matrix &A, const Vector &b, const Matrix &E, const Vector &d,
                     const Vector &g, const SimplexOptions &opt) {
  const int n = static_cast<int>(g.size());
  const int m = static_cast<int>(A.rows());
  const int q = static_cast<int>(E.rows());
  if ((m > 0 && A.cols() != n) || (q > 0 && E.cols() != n) || b.size() != m ||
      d.size() != q)
    throw GeometryError(ErrorKind::DimensionMismatch, "simplex_solve: inconsistent dimensions");

  // Column layout: [x+ (n) | x- (n) | slacks (m) | artificials (nart)].
  std::vector<bool> needs_art(m + q, false);
  int nart = 0;
  for (int i = 0; i < m; ++i)
    if (b[i] < 0.0) {
      needs_art[i] = true;
      ++nart;
    }
  for (int k = 0; k < q; ++k) {
    needs_art[m + k] = true;
    ++nart;
  }

  const int first_slack = 2 * n;
  const int first_art = first_slack + m;
  Tableau tab;
  tab.cols = first_art + nart;
  tab.T = Matrix::Zero(m + q, tab.cols + 1);
  tab.basis.assign(m + q, -1);

  int art = first_art;
  for (int i = 0; i < m + q; ++i) {
    const bool ineq = i < m;
    const double sign = ineq ? (b[i] < 0.0 ? -1.0 : 1.0) : (d[i - m] < 0.0 ? -1.0 : 1.0);
    for (int j = 0; j < n; ++j) {
      const double a = ineq ? A(i, j) : E(i - m, j);
      tab.T(i, j) = sign * a;
      tab.T(i, n + j) = -sign * a;
    }
    if (ineq)
      tab.T(i, first_slack + i) = sign;
    tab.T(i, tab.cols) = sign * (ineq ? b[i] : d[i - m]);
    if (needs_art[i]) {
      tab.T(i, art) = 1.0;
      tab.basis[i] = art++;
    } else {
      tab.basis[i] = first_slack + i;
    }
  }

  int iterations = 0;
  std::vector<bool> allowed(tab.cols, true);

  if (nart > 0) {
    Vector cost = Vector::Zero(tab.cols);
    cost.tail(nart).setConstant(-1.0);
    if (run(tab, cost, allowed, opt, iterations) == RunStatus::IterationLimit)
      throw GeometryError(ErrorKind::NotConverged, "simplex_solve: phase 1 iteration limit");

    double infeas = 0.0;
    for (int i = 0; i < static_cast<int>(tab.basis.size()); ++i)
      if (tab.basis[i] >= first_art)
        infeas += std::abs(tab.rhs(i));
    const double scale = 1.0 + std::max(b.size() ? b.cwiseAbs().maxCoeff() : 0.0,
                                        d.size() ? d.cwiseAbs().maxCoeff() : 0.0);
    if (infeas > opt.feas_tol * scale)
      throw GeometryError(ErrorKind::Infeasible, "simplex_solve: constraints are infeasible",
                          {}, infeas);

    // Drive zero-level artificials out of the basis; rows where that is
    // impossible are linearly dependent and are dropped.
    for (int i = 0; i < static_cast<int>(tab.basis.size());) {
      if (tab.basis[i] < first_art) {
        ++i;
        continue;
      }
      int col = -1;
      for (int j = 0; j < first_art; ++j)
        if (std::abs(tab.T(i, j)) > opt.pivot_tol) {
          col = j;
          break;
        }
      if (col >= 0) {
        tab.pivot(i, col);
        ++i;
      } else {
        tab.drop_row(i);
      }
    }
    for (int j = first_art; j < tab.cols; ++j)
      allowed[j] = false;
  }

  Vector cost = Vector::Zero(tab.cols);
  cost.head(n) = g;
  cost.segment(n, n) = -g;
  switch (run(tab, cost, allowed, opt, iterations)) {
  case RunStatus::Unbounded:
    throw GeometryError(ErrorKind::Unbounded, "simplex_solve: objective is unbounded");
  case RunStatus::IterationLimit:
    throw GeometryError(ErrorKind::NotConverged, "simplex_solve: phase 2 iteration limit");
  case RunStatus::Optimal:
    break;
  }

  Vector x = Vector::Zero(n);
  for (int i = 0; i < static_cast<int>(tab.basis.size()); ++i) {
    const int j = tab.basis[i];
    if (j < n)
      x[j] += tab.rhs(i);
    else if (j < 2 * n)
      x[j - n] -= tab.rhs(i);
  }
  return x;
}

} // namespace fwpo::geometry
