#pragma once

#include <Eigen/Dense>

namespace f2sa {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline bool all_finite(const Vector& v) { return v.allFinite(); }

}  // namespace f2sa
