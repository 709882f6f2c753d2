#pragma once

#include <Eigen/Dense>

namespace dcml {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

}  // namespace dcml
