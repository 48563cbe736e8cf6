#pragma once

#include <string>
#include <string_view>

#include "fwpo/geometry.hpp"

namespace fwpo::geometry {

/// Textual form of a constraint set, used by experiment config files.
///
///   box(lo=[0,0], hi=[35,35])
///   halfspaces(A=[[1,1],[-1,-1]], b=[0.1,0.1])
///   hyperplanes(E=[[1,1,1]], d=[90])
///   l2_ball(center=[0,0], radius=0.1414)
///   quadratic_groups(dim=6, groups=[[0,1,2],[3,4,5]], radii=[1,1])
///   weighted_l1(weights=[2,0,1], budget=20)
///   intersection(anchor=[0,0], members=[box(...), l2_ball(...)])
///
/// Whitespace is ignored. Group indices are zero-based. Throws
/// std::invalid_argument on syntax errors and GeometryError on invalid sets.
ConstraintSet parse_constraint_set(std::string_view text);

/// Inverse of parse_constraint_set; numbers are printed with 17 significant
/// digits so the round trip is exact.
std::string to_text(const ConstraintSet &set);

} // namespace fwpo::geometry
