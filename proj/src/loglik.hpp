#pragma once

// Weighted log-likelihoods of the regression families over
// (coefficients[, log theta]). Internal to the fitters.

#include <Eigen/Dense>

#include "countdiag/dist.hpp"
#include "countdiag/optimize.hpp"

namespace countdiag::detail {

/// References must outlive the returned objective.
Objective make_objective(Family family, const Eigen::MatrixXd& X,
                         const Eigen::VectorXd& y, const Eigen::VectorXd& w);

/// Per-observation log f(y_i) under a NB / Poisson with means mu.
Eigen::VectorXd log_density(Family family, const Eigen::VectorXd& y,
                            const Eigen::VectorXd& mu, double theta);

double log_theta_lower();
double log_theta_upper();

}  // namespace countdiag::detail
