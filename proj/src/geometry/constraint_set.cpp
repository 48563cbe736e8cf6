#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "fwpo/geometry.hpp"

namespace fwpo::geometry {

const char *to_string(ErrorKind kind) {
  switch (kind) {
  case ErrorKind::DimensionMismatch:
    return "dimension mismatch";
  case ErrorKind::InvalidSet:
    return "invalid set";
  case ErrorKind::Unbounded:
    return "unbounded";
  case ErrorKind::Infeasible:
    return "infeasible";
  case ErrorKind::NotConverged:
    return "not converged";
  }
  return "unknown";
}

GeometryError::GeometryError(ErrorKind kind, const std::string &what, Vector last_iterate,
                             double residual)
    : std::runtime_error(what), kind_(kind), last_iterate_(std::move(last_iterate)),
      residual_(residual) {}

namespace {

[[noreturn]] void invalid(const std::string &msg) {
  throw GeometryError(ErrorKind::InvalidSet, msg);
}

bool all_finite(const Vector &v) { return v.allFinite(); }

} // namespace

ConstraintSet::ConstraintSet(Node node, int dim)
    : node_(std::make_shared<const Node>(std::move(node))), dim_(dim) {}

ConstraintSet ConstraintSet::box(Vector lo, Vector hi) {
  if (lo.size() == 0 || lo.size() != hi.size())
    invalid("box: lo and hi must be nonempty and of equal size");
  if (!all_finite(lo) || !all_finite(hi))
    invalid("box: bounds must be finite");
  if ((lo.array() > hi.array()).any())
    invalid("box: lo must not exceed hi");
  const int n = static_cast<int>(lo.size());
  return ConstraintSet(Box{std::move(lo), std::move(hi)}, n);
}

ConstraintSet ConstraintSet::halfspaces(Matrix A, Vector b) {
  if (A.rows() == 0 || A.cols() == 0 || A.rows() != b.size())
    invalid("halfspaces: A must be m x N with m = size(b) >= 1");
  if (!A.allFinite() || !all_finite(b))
    invalid("halfspaces: coefficients must be finite");
  for (int i = 0; i < A.rows(); ++i)
    if (A.row(i).squaredNorm() == 0.0 && b[i] < 0.0)
      invalid("halfspaces: row with zero normal and negative offset is empty");
  const int n = static_cast<int>(A.cols());
  return ConstraintSet(Halfspaces{std::move(A), std::move(b)}, n);
}

ConstraintSet ConstraintSet::hyperplanes(Matrix E, Vector d) {
  if (E.rows() == 0 || E.cols() == 0 || E.rows() != d.size())
    invalid("hyperplanes: E must be q x N with q = size(d) >= 1");
  if (!E.allFinite() || !all_finite(d))
    invalid("hyperplanes: coefficients must be finite");
  Matrix pinv = E.completeOrthogonalDecomposition().pseudoInverse();
  const Vector x0 = pinv * d;
  if ((E * x0 - d).norm() > 1e-9 * (1.0 + d.norm()))
    invalid("hyperplanes: equations are inconsistent");
  const int n = static_cast<int>(E.cols());
  return ConstraintSet(Hyperplanes{std::move(E), std::move(d), std::move(pinv)}, n);
}

ConstraintSet ConstraintSet::l2_ball(Vector center, double radius) {
  if (center.size() == 0 || !all_finite(center))
    invalid("l2_ball: center must be a finite nonempty vector");
  if (!(radius > 0.0) || !std::isfinite(radius))
    invalid("l2_ball: radius must be positive");
  const int n = static_cast<int>(center.size());
  return ConstraintSet(L2Ball{std::move(center), radius}, n);
}

ConstraintSet ConstraintSet::quadratic_groups(int dim, std::vector<std::vector<int>> groups,
                                              std::vector<double> radii) {
  if (dim <= 0)
    invalid("quadratic_groups: dim must be positive");
  if (groups.empty() || groups.size() != radii.size())
    invalid("quadratic_groups: need one radius per group");
  std::vector<bool> used(dim, false);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (groups[g].empty())
      invalid("quadratic_groups: empty group");
    if (!(radii[g] > 0.0) || !std::isfinite(radii[g]))
      invalid("quadratic_groups: radii must be positive");
    for (int i : groups[g]) {
      if (i < 0 || i >= dim)
        invalid("quadratic_groups: index out of range");
      if (used[i])
        invalid("quadratic_groups: groups must be disjoint");
      used[i] = true;
    }
  }
  return ConstraintSet(QuadraticGroups{dim, std::move(groups), std::move(radii)}, dim);
}

ConstraintSet ConstraintSet::weighted_l1(Vector weights, double budget) {
  if (weights.size() == 0 || !all_finite(weights))
    invalid("weighted_l1: weights must be a finite nonempty vector");
  if (!(budget > 0.0) || !std::isfinite(budget))
    invalid("weighted_l1: budget must be positive");
  const int n = static_cast<int>(weights.size());
  return ConstraintSet(WeightedL1{std::move(weights), budget}, n);
}

ConstraintSet ConstraintSet::intersection(std::vector<ConstraintSet> members, Vector anchor) {
  if (members.empty())
    invalid("intersection: needs at least one member");
  const int n = members.front().dim();
  for (const auto &m : members)
    if (m.dim() != n)
      throw GeometryError(ErrorKind::DimensionMismatch,
                          "intersection: members have different dimensions");
  if (anchor.size() != n)
    throw GeometryError(ErrorKind::DimensionMismatch, "intersection: anchor dimension");

  // Zero-weight coordinates of a weighted-L1 member must be bounded elsewhere.
  for (std::size_t k = 0; k < members.size(); ++k) {
    const auto *w = members[k].get_if<WeightedL1>();
    if (!w || (w->weights.array() != 0.0).all())
      continue;
    std::vector<bool> covered(n, false);
    for (std::size_t j = 0; j < members.size(); ++j) {
      if (j == k)
        continue;
      const auto c = members[j].bounded_coordinates();
      for (int i = 0; i < n; ++i)
        covered[i] = covered[i] || c[i];
    }
    for (int i = 0; i < n; ++i)
      if (w->weights[i] == 0.0 && !covered[i]) {
        std::ostringstream os;
        os << "intersection: weighted_l1 coordinate " << i
           << " has zero weight and no other member bounds it";
        invalid(os.str());
      }
  }

  ConstraintSet set(Intersection{std::move(members), std::move(anchor)}, n);
  const auto &x = std::get<Intersection>(set.node());
  if (!contains(set, x.anchor, kFeasTol))
    invalid("intersection: anchor is not feasible");
  return set;
}

namespace {

// A weighted l1 ball with k nonzero weights is the polytope cut out by the 2^k
// sign patterns; beyond this many it is handled as a nonlinear set.
constexpr int kMaxL1PolytopeWeights = 10;

int nonzero_weights(const WeightedL1 &w) {
  return static_cast<int>((w.weights.array() != 0.0).count());
}

} // namespace

bool ConstraintSet::is_polyhedral() const {
  return std::visit(
      [](const auto &s) -> bool {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Box> || std::is_same_v<T, Halfspaces> ||
                      std::is_same_v<T, Hyperplanes>)
          return true;
        else if constexpr (std::is_same_v<T, WeightedL1>)
          return nonzero_weights(s) <= kMaxL1PolytopeWeights;
        else if constexpr (std::is_same_v<T, Intersection>)
          return std::all_of(s.members.begin(), s.members.end(),
                             [](const ConstraintSet &m) { return m.is_polyhedral(); });
        else
          return false;
      },
      node());
}

std::vector<bool> ConstraintSet::bounded_coordinates() const {
  const int n = dim_;
  return std::visit(
      [n](const auto &s) -> std::vector<bool> {
        using T = std::decay_t<decltype(s)>;
        std::vector<bool> out(n, false);
        if constexpr (std::is_same_v<T, Box> || std::is_same_v<T, L2Ball>) {
          out.assign(n, true);
        } else if constexpr (std::is_same_v<T, QuadraticGroups>) {
          for (const auto &g : s.groups)
            for (int i : g)
              out[i] = true;
        } else if constexpr (std::is_same_v<T, WeightedL1>) {
          for (int i = 0; i < n; ++i)
            out[i] = s.weights[i] != 0.0;
        } else if constexpr (std::is_same_v<T, Intersection>) {
          for (const auto &m : s.members) {
            const auto c = m.bounded_coordinates();
            for (int i = 0; i < n; ++i)
              out[i] = out[i] || c[i];
          }
        }
        return out;
      },
      node());
}

bool ConstraintSet::is_bounded() const {
  const auto c = bounded_coordinates();
  return std::all_of(c.begin(), c.end(), [](bool b) { return b; });
}

namespace {

void append_rows(Matrix &M, Vector &v, const Matrix &rows, const Vector &rhs) {
  const auto old = M.rows();
  M.conservativeResize(old + rows.rows(), rows.cols());
  v.conservativeResize(old + rhs.size());
  M.bottomRows(rows.rows()) = rows;
  v.tail(rhs.size()) = rhs;
}

void flatten_into(const ConstraintSet &set, PolyhedralSystem &sys) {
  const int n = set.dim();
  std::visit(
      [&](const auto &s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Box>) {
          Matrix rows(2 * n, n);
          rows << Matrix::Identity(n, n), -Matrix::Identity(n, n);
          Vector rhs(2 * n);
          rhs << s.hi, -s.lo;
          append_rows(sys.A, sys.b, rows, rhs);
        } else if constexpr (std::is_same_v<T, Halfspaces>) {
          append_rows(sys.A, sys.b, s.A, s.b);
        } else if constexpr (std::is_same_v<T, Hyperplanes>) {
          append_rows(sys.E, sys.d, s.E, s.d);
        } else if constexpr (std::is_same_v<T, WeightedL1>) {
          if (nonzero_weights(s) > kMaxL1PolytopeWeights)
            invalid("flatten: weighted l1 ball has too many facets");
          std::vector<int> idx;
          for (int i = 0; i < n; ++i)
            if (s.weights[i] != 0.0)
              idx.push_back(i);
          const int k = static_cast<int>(idx.size());
          Matrix rows = Matrix::Zero(1 << k, n);
          for (int p = 0; p < (1 << k); ++p)
            for (int j = 0; j < k; ++j)
              rows(p, idx[j]) = ((p >> j) & 1 ? -1.0 : 1.0) * std::abs(s.weights[idx[j]]);
          append_rows(sys.A, sys.b, rows, Vector::Constant(1 << k, s.budget));
        } else if constexpr (std::is_same_v<T, Intersection>) {
          for (const auto &m : s.members)
            flatten_into(m, sys);
        } else {
          invalid("flatten: set has a nonlinear member");
        }
      },
      set.node());
}

} // namespace

PolyhedralSystem flatten(const ConstraintSet &set) {
  const int n = set.dim();
  PolyhedralSystem sys{Matrix(0, n), Vector(0), Matrix(0, n), Vector(0)};
  flatten_into(set, sys);
  return sys;
}

bool contains(const ConstraintSet &set, const Vector &z, double tol) {
  if (z.size() != set.dim())
    throw GeometryError(ErrorKind::DimensionMismatch, "contains: dimension mismatch");
  return std::visit(
      [&](const auto &s) -> bool {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Box>) {
          return ((z - s.lo).array() >= -tol).all() && ((s.hi - z).array() >= -tol).all();
        } else if constexpr (std::is_same_v<T, Halfspaces>) {
          return ((s.A * z - s.b).array() <= tol).all();
        } else if constexpr (std::is_same_v<T, Hyperplanes>) {
          return ((s.E * z - s.d).array().abs() <= tol).all();
        } else if constexpr (std::is_same_v<T, L2Ball>) {
          return (z - s.center).norm() <= s.radius + tol;
        } else if constexpr (std::is_same_v<T, QuadraticGroups>) {
          for (std::size_t g = 0; g < s.groups.size(); ++g) {
            double sq = 0.0;
            for (int i : s.groups[g])
              sq += z[i] * z[i];
            if (std::sqrt(sq) > s.radii[g] + tol)
              return false;
          }
          return true;
        } else if constexpr (std::is_same_v<T, WeightedL1>) {
          return (s.weights.array() * z.array()).abs().sum() <= s.budget + tol;
        } else {
          return std::all_of(s.members.begin(), s.members.end(),
                             [&](const ConstraintSet &m) { return contains(m, z, tol); });
        }
      },
      set.node());
}

Box enclosing_box(const ConstraintSet &set) {
  const int n = set.dim();
  const double inf = std::numeric_limits<double>::infinity();
  return std::visit(
      [&](const auto &s) -> Box {
        using T = std::decay_t<decltype(s)>;
        Box out{Vector::Constant(n, -inf), Vector::Constant(n, inf)};
        if constexpr (std::is_same_v<T, Box>) {
          out = s;
        } else if constexpr (std::is_same_v<T, L2Ball>) {
          out.lo = s.center.array() - s.radius;
          out.hi = s.center.array() + s.radius;
        } else if constexpr (std::is_same_v<T, QuadraticGroups>) {
          for (std::size_t g = 0; g < s.groups.size(); ++g)
            for (int i : s.groups[g]) {
              out.lo[i] = -s.radii[g];
              out.hi[i] = s.radii[g];
            }
        } else if constexpr (std::is_same_v<T, WeightedL1>) {
          for (int i = 0; i < n; ++i)
            if (s.weights[i] != 0.0) {
              out.hi[i] = s.budget / std::abs(s.weights[i]);
              out.lo[i] = -out.hi[i];
            }
        } else if constexpr (std::is_same_v<T, Intersection>) {
          for (const auto &m : s.members) {
            const Box b = enclosing_box(m);
            out.lo = out.lo.cwiseMax(b.lo);
            out.hi = out.hi.cwiseMin(b.hi);
          }
        }
        return out;
      },
      set.node());
}

std::vector<Vector> enumerate_vertices(const PolyhedralSystem &sys, double tol) {
  const int n = static_cast<int>(std::max(sys.A.cols(), sys.E.cols()));
  const int m = static_cast<int>(sys.A.rows());
  const int q = static_cast<int>(sys.E.rows());
  const int rows = m + q;
  std::vector<Vector> out;
  if (n == 0 || rows < n)
    return out;

  Matrix all(rows, n);
  Vector rhs(rows);
  if (m > 0) {
    all.topRows(m) = sys.A;
    rhs.head(m) = sys.b;
  }
  if (q > 0) {
    all.bottomRows(q) = sys.E;
    rhs.tail(q) = sys.d;
  }

  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i)
    idx[i] = i;
  Matrix M(n, n);
  Vector r(n);
  while (true) {
    for (int i = 0; i < n; ++i) {
      M.row(i) = all.row(idx[i]);
      r[i] = rhs[idx[i]];
    }
    Eigen::FullPivLU<Matrix> lu(M);
    if (lu.rank() == n) {
      const Vector x = lu.solve(r);
      bool ok = true;
      for (int i = 0; i < m && ok; ++i)
        ok = sys.A.row(i).dot(x) <= sys.b[i] + tol * (1.0 + std::abs(sys.b[i]));
      for (int k = 0; k < q && ok; ++k)
        ok = std::abs(sys.E.row(k).dot(x) - sys.d[k]) <= tol * (1.0 + std::abs(sys.d[k]));
      if (ok)
        out.push_back(x);
    }
    // next combination of n out of rows
    int i = n - 1;
    while (i >= 0 && idx[i] == rows - n + i)
      --i;
    if (i < 0)
      break;
    ++idx[i];
    for (int j = i + 1; j < n; ++j)
      idx[j] = idx[j - 1] + 1;
  }
  return out;
}

double diameter(const ConstraintSet &set) {
  if (!set.is_bounded())
    throw GeometryError(ErrorKind::Unbounded, "diameter: set is unbounded");
  return std::visit(
      [&](const auto &s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Box>) {
          return (s.hi - s.lo).norm();
        } else if constexpr (std::is_same_v<T, L2Ball>) {
          return 2.0 * s.radius;
        } else if constexpr (std::is_same_v<T, QuadraticGroups>) {
          double sq = 0.0;
          for (double r : s.radii)
            sq += r * r;
          return 2.0 * std::sqrt(sq);
        } else if constexpr (std::is_same_v<T, WeightedL1>) {
          return 2.0 * s.budget / s.weights.cwiseAbs().minCoeff();
        } else if constexpr (std::is_same_v<T, Intersection>) {
          if (set.is_polyhedral() && set.dim() <= 4) {
            const auto verts = enumerate_vertices(flatten(set));
            if (!verts.empty()) {
              double best = 0.0;
              for (std::size_t i = 0; i < verts.size(); ++i)
                for (std::size_t j = i + 1; j < verts.size(); ++j)
                  best = std::max(best, (verts[i] - verts[j]).norm());
              return best;
            }
          }
          const Box b = enclosing_box(set);
          double best = (b.hi - b.lo).norm();
          for (const auto &m : s.members)
            if (m.is_bounded())
              best = std::min(best, diameter(m));
          return best;
        } else {
          throw GeometryError(ErrorKind::Unbounded, "diameter: set is unbounded");
        }
      },
      set.node());
}

} // namespace fwpo::geometry
