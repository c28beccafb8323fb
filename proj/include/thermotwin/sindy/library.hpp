#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace thermotwin {

/// Degree-1 polynomial library. Row k is [1, x_k, u_k]; columns are ordered
/// constant, states, controls.
Eigen::MatrixXd build_library(const Eigen::MatrixXd& states, const Eigen::MatrixXd& controls);

/// Second-order finite differences: central inside, one-sided at both ends.
std::vector<double> estimate_derivatives(std::span<const double> series, double dt);

/// Column-wise version of estimate_derivatives.
Eigen::MatrixXd estimate_derivatives(const Eigen::MatrixXd& series, double dt);

}  // namespace thermotwin
