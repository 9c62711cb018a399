#pragma once

#include <Eigen/Dense>

namespace qwalk {

// Matrix exponential by scaling and squaring with a diagonal Pade approximant
// (degree 3..13 chosen from the 1-norm, Higham 2005).
Eigen::MatrixXd expm(const Eigen::MatrixXd& a);

}  // namespace qwalk
