#pragma once

#include <Eigen/Dense>

namespace fwpo {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Selects the serial reference path or the OpenMP path of a kernel.
/// Both paths produce bitwise-identical results.
enum class Exec { Serial, Parallel };

} // namespace fwpo
