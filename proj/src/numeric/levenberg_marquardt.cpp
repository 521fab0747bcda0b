#include "ionfb/numeric/levenberg_marquardt.hpp"

#include <algorithm>
#include <cmath>

#include "ionfb/common/errors.hpp"

namespace ionfb::numeric {

LmResult levenberg_marquardt(const ResidualFn& fn, Eigen::VectorXd params,
                             const LmOptions& options) {
  Eigen::VectorXd r;
  Eigen::MatrixXd jac;
  if (!fn(params, r, &jac)) throw NumericalError("least squares: infeasible starting point");
  if (!r.allFinite() || !jac.allFinite())
    throw NumericalError("least squares: non-finite residuals at starting point");

  LmResult out;
  out.residual_count = r.size();
  double cost = r.squaredNorm();
  double lambda = options.initial_lambda;
  Eigen::VectorXd trial_r;

  for (int it = 0; it < options.max_iterations; ++it) {
    out.iterations = it + 1;
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd grad = jac.transpose() * r;
    if (grad.lpNorm<Eigen::Infinity>() <= options.gradient_tolerance * std::max(cost, 1e-300)) {
      out.converged = true;
      break;
    }
    Eigen::VectorXd diag = jtj.diagonal().cwiseMax(1e-30 * std::max(1.0, jtj.diagonal().maxCoeff()));

    bool accepted = false;
    bool tiny_step = false;
    for (int attempt = 0; attempt < 60; ++attempt) {
      Eigen::MatrixXd a = jtj;
      a.diagonal() += lambda * diag;
      const Eigen::VectorXd step = a.ldlt().solve(-grad);
      if (!step.allFinite()) {
        lambda *= 10.0;
        continue;
      }
      const Eigen::VectorXd trial = params + step;
      tiny_step = step.norm() <= options.step_tolerance * (params.norm() + options.step_tolerance);
      if (fn(trial, trial_r, nullptr) && trial_r.allFinite()) {
        const double trial_cost = trial_r.squaredNorm();
        if (trial_cost <= cost) {
          const double decrease = cost - trial_cost;
          params = trial;
          r = trial_r;
          cost = trial_cost;
          lambda = std::max(lambda / 10.0, 1e-15);
          accepted = true;
          if (decrease <= options.cost_tolerance * std::max(cost, 1e-300) || tiny_step)
            out.converged = true;
          break;
        }
      }
      if (tiny_step) break;
      lambda *= 10.0;
    }
    if (!accepted) {
      // No downhill step at any damping: we sit at a stationary point to within
      // the step tolerance.
      out.converged = tiny_step || lambda > 1e12;
      break;
    }
    fn(params, r, &jac);
    if (out.converged) break;
  }

  out.params = params;
  out.cost = cost;
  out.jtj = jac.transpose() * jac;
  return out;
}

Eigen::MatrixXd covariance(const LmResult& result) {
  const long dof = result.residual_count - result.params.size();
  const double reduced = dof > 0 ? result.cost / static_cast<double>(dof) : 0.0;
  const Eigen::MatrixXd inv =
      result.jtj.completeOrthogonalDecomposition().pseudoInverse();
  return inv * reduced;
}

}  // namespace ionfb::numeric
