#pragma once

#include <Eigen/Dense>
#include <functional>
#include <limits>
#include <optional>

namespace countdiag {

/// A log-likelihood to maximize. `value_and_gradient` fills the score when
/// given a non-null pointer. `hessian` is optional; without it the Hessian
/// is taken by central differences of the score.
struct Objective {
  std::function<double(const Eigen::VectorXd&, Eigen::VectorXd*)>
      value_and_gradient;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> hessian;
};

struct OptimizeOptions {
  int max_iterations = 200;
  double gradient_tolerance = 1e-6;   // max-norm of the free score
  double relative_tolerance = 1e-10;  // |delta loglik| / max(1, |loglik|)
  /// Optional box bounds; coordinates sitting on a bound with the score
  /// pointing outward are frozen.
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
};

struct OptimizeResult {
  Eigen::VectorXd x;
  double value = 0.0;
  Eigen::VectorXd gradient;
  double gradient_norm = 0.0;  // over free coordinates
  int iterations = 0;
  std::vector<bool> at_bound;
};

/// Damped Newton ascent with Levenberg regularization and Armijo
/// backtracking. Throws ConvergenceError when the tolerances are not met.
OptimizeResult maximize(const Objective& objective, Eigen::VectorXd start,
                        const OptimizeOptions& options = {});

/// Central-difference Hessian of the log-likelihood built from the analytic
/// score, step 1e-5 * (1 + |x_k|), symmetrized.
Eigen::MatrixXd numerical_hessian(const Objective& objective,
                                  const Eigen::VectorXd& x);

/// Inverse of the observed information -H. Throws FitError if -H is not
/// positive definite.
Eigen::MatrixXd invert_information(const Eigen::MatrixXd& hessian);

}  // namespace countdiag
