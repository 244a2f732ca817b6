#pragma once

#include <Eigen/Dense>

namespace hmmrates {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
// Particle stores and design matrices are read one row at a time.
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

}  // namespace hmmrates
