#pragma once

#include <variant>
#include <vector>

#include "fwpo/geometry.hpp"

// Leaf pieces with closed-form projections. Dykstra's method cycles over
// these; pointers refer into the ConstraintSet being projected onto.
namespace fwpo::geometry::detail {

struct HalfspaceAtom {
  Vector a;
  double b;
  double a_norm2;
};

using Atom = std::variant<const Box *, HalfspaceAtom, const Hyperplanes *, const L2Ball *,
                          const QuadraticGroups *, const WeightedL1 *>;

std::vector<Atom> flatten_atoms(const ConstraintSet &set);

Vector project_atom(const Atom &atom, const Vector &z);

Vector project_box(const Box &box, const Vector &z);
Vector project_halfspace(const HalfspaceAtom &h, const Vector &z);
Vector project_hyperplanes(const Hyperplanes &h, const Vector &z);
Vector project_ball(const L2Ball &ball, const Vector &z);
Vector project_groups(const QuadraticGroups &q, const Vector &z);
Vector project_weighted_l1(const WeightedL1 &w, const Vector &z);

/// Dykstra's alternating projections over `atoms`, starting from z.
Vector dykstra(const std::vector<Atom> &atoms, const Vector &z, const DykstraOptions &opt);

} // namespace fwpo::geometry::detail
