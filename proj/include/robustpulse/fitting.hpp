#pragma once

#include <functional>

#include <Eigen/Dense>

namespace robustpulse {

// Residuals r(x) and their Jacobian dr/dx at x.
using ResidualFunction =
    std::function<void(const Eigen::VectorXd& x, Eigen::VectorXd& r, Eigen::MatrixXd& jac)>;

struct LeastSquaresOptions {
  int max_iterations = 500;
  double step_tolerance = 1e-14;
  double cost_tolerance = 1e-30;
  double gradient_tolerance = 1e-300;
};

struct LeastSquaresResult {
  Eigen::VectorXd x;
  Eigen::VectorXd residual;
  Eigen::MatrixXd jacobian;
  double cost = 0.0;  // sum of squared residuals
  int iterations = 0;
  bool converged = false;
};

// Levenberg-Marquardt with Marquardt diagonal scaling; iterates are projected
// onto the box [lower, upper] (use +-inf for free parameters).
LeastSquaresResult levenberg_marquardt(const ResidualFunction& f, Eigen::VectorXd x0,
                                       const Eigen::VectorXd& lower,
                                       const Eigen::VectorXd& upper,
                                       const LeastSquaresOptions& options = {});

// (J^T J)^-1 via pseudo-inverse, so rank-deficient fits still report finite
// variances along identifiable directions.
Eigen::MatrixXd normal_inverse(const Eigen::MatrixXd& jac);

}  // namespace robustpulse
