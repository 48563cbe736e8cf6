#include <algorithm>
#include <cmath>

#include "atoms.hpp"
#include "fwpo/geometry.hpp"
#include "fwpo/simplex.hpp"

namespace fwpo::geometry {
namespace detail {

Vector project_box(const Box &box, const Vector &z) {
  return z.cwiseMax(box.lo).cwiseMin(box.hi);
}

Vector project_halfspace(const HalfspaceAtom &h, const Vector &z) {
  const double v = h.a.dot(z) - h.b;
  if (v <= 0.0 || h.a_norm2 == 0.0)
    return z;
  return z - (v / h.a_norm2) * h.a;
}

Vector project_hyperplanes(const Hyperplanes &h, const Vector &z) {
  return z - h.pinv * (h.E * z - h.d);
}

Vector project_ball(const L2Ball &ball, const Vector &z) {
  const Vector off = z - ball.center;
  const double r = off.norm();
  if (r <= ball.radius)
    return z;
  return ball.center + (ball.radius / r) * off;
}

Vector project_groups(const QuadraticGroups &q, const Vector &z) {
  Vector y = z;
  for (std::size_t g = 0; g < q.groups.size(); ++g) {
    double sq = 0.0;
    for (int i : q.groups[g])
      sq += z[i] * z[i];
    const double r = std::sqrt(sq);
    if (r > q.radii[g]) {
      const double s = q.radii[g] / r;
      for (int i : q.groups[g])
        y[i] = s * z[i];
    }
  }
  return y;
}

// Weighted soft-threshold y_i = sign(z_i) max(|z_i| - lambda |w_i|, 0), with
// lambda found by bisection so that sum |w_i y_i| = budget.
Vector project_weighted_l1(const WeightedL1 &w, const Vector &z) {
  const Eigen::ArrayXd a = w.weights.cwiseAbs().array();
  const Eigen::ArrayXd az = z.cwiseAbs().array();
  if ((a * az).sum() <= w.budget)
    return z;

  auto mass = [&](double lambda) { return (a * (az - lambda * a).max(0.0)).sum(); };
  double lo = 0.0;
  double hi = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i)
    if (a[i] > 0.0)
      hi = std::max(hi, az[i] / a[i]);
  for (int it = 0; it < 200 && hi - lo > 1e-16 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mass(mid) > w.budget)
      lo = mid;
    else
      hi = mid;
  }
  Vector y = z;
  for (Eigen::Index i = 0; i < a.size(); ++i)
    if (a[i] > 0.0)
      y[i] = std::copysign(std::max(az[i] - hi * a[i], 0.0), z[i]);
  return y;
}

Vector project_atom(const Atom &atom, const Vector &z) {
  return std::visit(
      [&](const auto &a) -> Vector {
        using T = std::decay_t<decltype(a)>;
        if constexpr (std::is_same_v<T, HalfspaceAtom>)
          return project_halfspace(a, z);
        else if constexpr (std::is_same_v<T, const Box *>)
          return project_box(*a, z);
        else if constexpr (std::is_same_v<T, const Hyperplanes *>)
          return project_hyperplanes(*a, z);
        else if constexpr (std::is_same_v<T, const L2Ball *>)
          return project_ball(*a, z);
        else if constexpr (std::is_same_v<T, const QuadraticGroups *>)
          return project_groups(*a, z);
        else
          return project_weighted_l1(*a, z);
      },
      atom);
}

namespace {

void flatten_atoms_into(const ConstraintSet &set, std::vector<Atom> &out) {
  std::visit(
      [&](const auto &s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Halfspaces>) {
          for (int i = 0; i < s.A.rows(); ++i) {
            Vector a = s.A.row(i).transpose();
            const double n2 = a.squaredNorm();
            out.push_back(HalfspaceAtom{std::move(a), s.b[i], n2});
          }
        } else if constexpr (std::is_same_v<T, Intersection>) {
          for (const auto &m : s.members)
            flatten_atoms_into(m, out);
        } else {
          out.push_back(&s);
        }
      },
      set.node());
}

} // namespace

std::vector<Atom> flatten_atoms(const ConstraintSet &set) {
  std::vector<Atom> out;
  flatten_atoms_into(set, out);
  return out;
}

Vector dykstra(const std::vector<Atom> &atoms, const Vector &z, const DykstraOptions &opt) {
  const std::size_t k = atoms.size();
  if (k == 1)
    return project_atom(atoms.front(), z);

  Vector x = z;
  std::vector<Vector> incr(k, Vector::Zero(z.size()));
  std::vector<Vector> prev(k);
  double residual = 0.0;
  for (int pass = 0; pass < opt.max_passes; ++pass) {
    residual = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      const Vector w = x + incr[i];
      Vector y = project_atom(atoms[i], w);
      incr[i] = w - y;
      residual += pass == 0 ? 0.0 : (y - prev[i]).squaredNorm();
      prev[i] = y;
      x = std::move(y);
    }
    // Unchanged outputs alone can be a plateau: an atom may return the same
    // point for many passes while its correction drifts. Also require every
    // atom's output to agree with the final one.
    double spread = 0.0;
    for (std::size_t i = 0; i < k; ++i)
      spread += (prev[i] - x).squaredNorm();
    residual = std::sqrt(residual + spread);
    if (pass > 0 && residual < opt.tol)
      return x;
  }
  throw GeometryError(ErrorKind::NotConverged, "project: Dykstra did not converge", x,
                      residual);
}

} // namespace detail

namespace {

void check_dim(const ConstraintSet &set, const Vector &v, const char *what) {
  if (v.size() != set.dim())
    throw GeometryError(ErrorKind::DimensionMismatch, std::string(what) + ": dimension mismatch");
}

Vector project_impl(const ConstraintSet &set, const std::vector<detail::Atom> &atoms,
                    const Vector &z, const DykstraOptions &opt) {
  if (contains(set, z, 0.0))
    return z;
  Vector y = detail::dykstra(atoms, z, opt);
  if (!contains(set, y, kFeasTol))
    throw GeometryError(ErrorKind::NotConverged, "project: result is not feasible", y);
  return y;
}

// Projected gradient ascent on <x, g> from the anchor. Used for
// intersections that contain a nonlinear member. Each iterate is the proximal
// point argmax <g, y> - ||y - cur||^2 / (2 t); doubling t lets the iterate
// slide along faces nearly orthogonal to g, where a fixed step would creep.
Vector lmo_pga(const ConstraintSet &set, const Intersection &x, const Vector &g) {
  constexpr int kMaxIter = 1000;
  constexpr double kMoveTol = 1e-8;
  const auto atoms = detail::flatten_atoms(set);
  const double diam = diameter(set);
  double step = 0.1 * diam / g.norm();
  const double max_step = 1e6 * diam / g.norm();
  Vector cur = x.anchor;
  double move = 0.0;
  for (int it = 0; it < kMaxIter; ++it) {
    Vector next = project_impl(set, atoms, cur + step * g, DykstraOptions{});
    move = (next - cur).norm();
    cur = std::move(next);
    if (move < kMoveTol)
      return cur;
    step = std::min(2.0 * step, max_step);
  }
  // A slowly creeping iterate is still a near-maximizer; only report a real stall.
  if (move > 1e-6)
    throw GeometryError(ErrorKind::NotConverged, "lmo: projected ascent did not converge", cur,
                        move);
  return cur;
}

} // namespace

Vector lmo(const ConstraintSet &set, const Vector &g) {
  check_dim(set, g, "lmo");
  // Polyhedral sets may be bounded without any member bounding a coordinate
  // on its own; the simplex solver reports unboundedness for those.
  if (!set.is_bounded() && !set.is_polyhedral())
    throw GeometryError(ErrorKind::Unbounded, "lmo: set is unbounded");
  const bool zero = (g.array() == 0.0).all();
  const int n = set.dim();

  return std::visit(
      [&](const auto &s) -> Vector {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Box>) {
          Vector c = s.lo;
          for (int i = 0; i < n; ++i)
            if (g[i] > 0.0)
              c[i] = s.hi[i];
          return c;
        } else if constexpr (std::is_same_v<T, L2Ball>) {
          if (zero)
            return s.center;
          return s.center + (s.radius / g.norm()) * g;
        } else if constexpr (std::is_same_v<T, QuadraticGroups>) {
          Vector c = Vector::Zero(n);
          for (std::size_t k = 0; k < s.groups.size(); ++k) {
            double sq = 0.0;
            for (int i : s.groups[k])
              sq += g[i] * g[i];
            if (sq == 0.0)
              continue;
            const double scale = s.radii[k] / std::sqrt(sq);
            for (int i : s.groups[k])
              c[i] = scale * g[i];
          }
          return c;
        } else if constexpr (std::is_same_v<T, WeightedL1>) {
          Vector c = Vector::Zero(n);
          if (zero)
            return c;
          int best = 0;
          double best_ratio = -1.0;
          for (int i = 0; i < n; ++i) {
            if (s.weights[i] == 0.0) {
              if (g[i] != 0.0)
                throw GeometryError(ErrorKind::Unbounded, "lmo: set is unbounded");
              continue;
            }
            const double ratio = std::abs(g[i]) / std::abs(s.weights[i]);
            if (ratio > best_ratio) {
              best_ratio = ratio;
              best = i;
            }
          }
          c[best] = std::copysign(s.budget / std::abs(s.weights[best]), g[best]);
          return c;
        } else if constexpr (std::is_same_v<T, Intersection>) {
          if (zero)
            return s.anchor;
          if (set.is_polyhedral()) {
            const auto sys = flatten(set);
            return simplex_solve(sys.A, sys.b, sys.E, sys.d, g);
          }
          return lmo_pga(set, s, g);
        } else if constexpr (std::is_same_v<T, Halfspaces>) {
          return simplex_solve(s.A, s.b, Matrix(0, n), Vector(0), g);
        } else {
          throw GeometryError(ErrorKind::Unbounded, "lmo: set is unbounded");
        }
      },
      set.node());
}

Vector project(const ConstraintSet &set, const Vector &z, const DykstraOptions &opt) {
  check_dim(set, z, "project");
  if (!z.allFinite())
    throw GeometryError(ErrorKind::InvalidSet, "project: input is not finite");
  return std::visit(
      [&](const auto &s) -> Vector {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Box>)
          return detail::project_box(s, z);
        else if constexpr (std::is_same_v<T, Hyperplanes>)
          return detail::project_hyperplanes(s, z);
        else if constexpr (std::is_same_v<T, L2Ball>)
          return detail::project_ball(s, z);
        else if constexpr (std::is_same_v<T, QuadraticGroups>)
          return detail::project_groups(s, z);
        else if constexpr (std::is_same_v<T, WeightedL1>)
          return detail::project_weighted_l1(s, z);
        else
          return project_impl(set, detail::flatten_atoms(set), z, opt);
      },
      set.node());
}

double fw_gap_point(const ConstraintSet &set, const Vector &x, const Vector &g) {
  check_dim(set, x, "fw_gap_point");
  if (!contains(set, x, kFeasTol))
    throw GeometryError(ErrorKind::Infeasible, "fw_gap_point: x is not feasible");
  return (lmo(set, g) - x).dot(g);
}

} // namespace fwpo::geometry
