#pragma once

#include <Eigen/Dense>

namespace fairpca {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

}  // namespace fairpca
