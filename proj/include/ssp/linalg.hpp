#pragma once

#include <Eigen/Dense>

namespace ssp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;

/// Elementwise nonnegativity threshold shared by the monotonicity analysis.
inline constexpr double kTolNonneg = 1e-12;

inline double sup_norm(const Vector& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace ssp
