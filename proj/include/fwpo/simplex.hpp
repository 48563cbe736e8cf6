#pragma once

#include "fwpo/types.hpp"

namespace fwpo::geometry {

struct SimplexOptions {
  double pivot_tol = 1e-9;
  double feas_tol = 1e-7;
  int max_iterations = 100000;
};

/// Maximizes <x, g> over {x free : A x <= b, E x = d} with a dense two-phase
/// tableau simplex. Free variables are split as x = x+ - x-. Entering and
/// leaving variables follow Bland's rule (lowest index), so the returned
/// vertex is deterministic.
///
/// Either constraint block may have zero rows; the column count must equal
/// g.size() in both. Throws GeometryError (Infeasible, Unbounded,
/// NotConverged, DimensionMismatch).
Vector simplex_solve(const Matrix &A, const Vector &b, const Matrix &E, const Vector &d,
                     const Vector &g, const SimplexOptions &opt = {});

} // namespace fwpo::geometry
