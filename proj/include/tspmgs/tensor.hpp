#pragma once

#include <Eigen/Dense>

namespace tspmgs {

// Row-major: one embedding per row.
using Vector = Eigen::VectorXd;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

}  // namespace tspmgs
