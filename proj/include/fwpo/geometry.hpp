#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "fwpo/types.hpp"

/// Convex feasible-action sets and the three oracles used by every algorithm
/// in this library: membership, linear maximization and Euclidean projection.
namespace fwpo::geometry {

/// Default additive slack for feasibility checks.
inline constexpr double kFeasTol = 1e-6;

enum class ErrorKind {
  DimensionMismatch,
  InvalidSet,
  Unbounded,
  Infeasible,
  NotConverged,
};

const char *to_string(ErrorKind kind);

class GeometryError : public std::runtime_error {
public:
  GeometryError(ErrorKind kind, const std::string &what, Vector last_iterate = {},
                double residual = 0.0);

  ErrorKind kind() const { return kind_; }
  /// Last iterate of an iterative routine that failed to converge (may be empty).
  const Vector &last_iterate() const { return last_iterate_; }
  double residual() const { return residual_; }

private:
  ErrorKind kind_;
  Vector last_iterate_;
  double residual_;
};

// Leaf sets. Instances are only created through the ConstraintSet factories,
// which validate them.

/// lo <= x <= hi
struct Box {
  Vector lo, hi;
};
/// A x <= b
struct Halfspaces {
  Matrix A;
  Vector b;
};
/// E x = d
struct Hyperplanes {
  Matrix E;
  Vector d;
  Matrix pinv; // E^T (E E^T)^+, cached for projection
};
/// ||x - center||_2 <= radius
struct L2Ball {
  Vector center;
  double radius;
};
/// For each group g: sum_{i in g} x_i^2 <= r_g^2. Groups are disjoint;
/// coordinates outside every group are unconstrained.
struct QuadraticGroups {
  int dim;
  std::vector<std::vector<int>> groups;
  std::vector<double> radii;
};
/// sum_i |w_i x_i| <= budget. Coordinates with w_i = 0 are unconstrained.
struct WeightedL1 {
  Vector weights;
  double budget;
};

class ConstraintSet;

/// Intersection of member sets. `anchor` is a point known to be feasible.
struct Intersection {
  std::vector<ConstraintSet> members;
  Vector anchor;
};

/// Immutable, cheaply copyable description of a nonempty closed convex set.
class ConstraintSet {
public:
  using Node = std::variant<Box, Halfspaces, Hyperplanes, L2Ball, QuadraticGroups,
                            WeightedL1, Intersection>;

  static ConstraintSet box(Vector lo, Vector hi);
  static ConstraintSet halfspaces(Matrix A, Vector b);
  static ConstraintSet hyperplanes(Matrix E, Vector d);
  static ConstraintSet l2_ball(Vector center, double radius);
  static ConstraintSet quadratic_groups(int dim, std::vector<std::vector<int>> groups,
                                        std::vector<double> radii);
  static ConstraintSet weighted_l1(Vector weights, double budget);
  static ConstraintSet intersection(std::vector<ConstraintSet> members, Vector anchor);

  int dim() const { return dim_; }
  const Node &node() const { return *node_; }

  template <class T> const T *get_if() const { return std::get_if<T>(node_.get()); }

  /// True when built only from Box, Halfspaces, Hyperplanes and weighted l1
  /// balls with at most ten nonzero weights (expanded into sign-pattern facets).
  bool is_polyhedral() const;
  /// True when every coordinate is bounded by some member (structural check).
  bool is_bounded() const;
  /// Coordinates bounded by this set on its own.
  std::vector<bool> bounded_coordinates() const;

private:
  ConstraintSet(Node node, int dim);

  std::shared_ptr<const Node> node_;
  int dim_ = 0;
};

/// Polyhedral description {x : A x <= b, E x = d}.
struct PolyhedralSystem {
  Matrix A;
  Vector b;
  Matrix E;
  Vector d;
};

/// Flattens a polyhedral set into one inequality/equality system.
/// Throws InvalidSet if the set has a nonlinear member.
PolyhedralSystem flatten(const ConstraintSet &set);

bool contains(const ConstraintSet &set, const Vector &z, double tol = kFeasTol);

/// argmax_{c in set} <c, g>. For g = 0 returns the anchor (intersection),
/// center (ball, groups, weighted L1) or lo (box).
Vector lmo(const ConstraintSet &set, const Vector &g);

struct DykstraOptions {
  double tol = 1e-10;
  int max_passes = 10000;
};

/// Euclidean projection. Intersections use Dykstra's alternating projections
/// over their flattened leaf atoms.
Vector project(const ConstraintSet &set, const Vector &z, const DykstraOptions &opt = {});

/// Frank-Wolfe gap <lmo(g) - x, g>. Throws Infeasible if x is not in the set.
double fw_gap_point(const ConstraintSet &set, const Vector &x, const Vector &g);

/// Upper bound on the Euclidean diameter. Exact for Box, L2Ball,
/// QuadraticGroups, WeightedL1, and polyhedral intersections with dim <= 4.
double diameter(const ConstraintSet &set);

/// Axis-aligned box enclosing the set, from the bounded members' own bounds.
/// Not necessarily tight.
Box enclosing_box(const ConstraintSet &set);

/// Vertices of {A x <= b, E x = d} in dimension <= 4 by enumerating active
/// constraint subsets. Duplicates are not removed.
std::vector<Vector> enumerate_vertices(const PolyhedralSystem &sys, double tol = 1e-9);

} // namespace fwpo::geometry
