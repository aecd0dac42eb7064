#pragma once

#include <Eigen/Dense>
#include <string>

#include "countdiag/fit.hpp"
#include "countdiag/optimize.hpp"

namespace countdiag::detail {

/// Shape, weight and rank checks shared by the regression fitters.
void check_inputs(const DesignMatrix& design, const Eigen::VectorXd& response,
                  const Eigen::VectorXd& weights, const std::string& what);

/// Method-of-moments starting value for log theta.
double moment_log_theta(const Eigen::VectorXd& y, const Eigen::VectorXd& w);

OptimizeOptions optimizer_options(const FitOptions& options, Family family,
                                  Eigen::Index n_coefficients);

/// Packs an optimizer result into a FittedModel and, when requested,
/// attaches the inverse observed information.
FittedModel finalize(Family family, const DesignMatrix& design,
                     const Eigen::VectorXd& response, const Eigen::VectorXd& weights,
                     const Objective& objective, const OptimizeResult& result,
                     const FitOptions& options);

/// Covariance with coordinates pinned at a bound given zero variance.
Eigen::MatrixXd covariance_at(const Objective& objective, const Eigen::VectorXd& x,
                              const std::vector<bool>& pinned);

}  // namespace countdiag::detail
