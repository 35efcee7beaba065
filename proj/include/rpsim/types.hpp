#pragma once

#include <Eigen/Dense>

namespace rpsim {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

}  // namespace rpsim
