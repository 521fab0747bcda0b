#pragma once

#include <functional>

#include <Eigen/Dense>

namespace ionfb::numeric {

/// Fills the residual vector and, when `jacobian` is non-null, its Jacobian.
/// Returns false if the parameters are outside the feasible region; the
/// solver then treats the trial step as rejected.
using ResidualFn =
    std::function<bool(const Eigen::VectorXd& params, Eigen::VectorXd& residuals,
                       Eigen::MatrixXd* jacobian)>;

struct LmOptions {
  int max_iterations = 200;
  double step_tolerance = 1e-12;
  double cost_tolerance = 1e-15;
  double gradient_tolerance = 1e-14;
  double initial_lambda = 1e-3;
};

struct LmResult {
  Eigen::VectorXd params;
  Eigen::MatrixXd jtj;  // J^T J at the solution
  double cost = 0.0;    // sum of squared residuals
  int iterations = 0;
  long residual_count = 0;
  bool converged = false;
};

/// Levenberg-Marquardt with Marquardt's diagonal scaling. On success the
/// result is a stationary point of the sum of squares.
LmResult levenberg_marquardt(const ResidualFn& fn, Eigen::VectorXd initial,
                             const LmOptions& options = {});

/// Parameter covariance, (J^T J)^-1 scaled by the reduced chi-square.
Eigen::MatrixXd covariance(const LmResult& result);

}  // namespace ionfb::numeric
