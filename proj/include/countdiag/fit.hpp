#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "countdiag/dist.hpp"
#include "countdiag/formula.hpp"
#include "countdiag/predictive.hpp"

namespace countdiag {

enum class Link { log, logit };

/// A single regression fit. Parameters are (coefficients, log theta) when
/// the family has a dispersion parameter.
struct FittedModel {
  Family family = Family::poisson;
  Link link = Link::log;
  Eigen::VectorXd coefficients;
  std::vector<std::string> coefficient_names;
  std::optional<double> log_theta;
  /// theta ran into the max_theta clamp; the model is effectively Poisson.
  bool theta_at_bound = false;
  double loglik = 0.0;
  int df = 0;
  double n_obs = 0.0;  // sum of weights
  Eigen::VectorXd fitted_means;  // mu_i on the training rows
  Eigen::VectorXd weights;
  /// Inverse observed information over (coefficients[, log theta]); empty
  /// when covariance was not requested.
  Eigen::MatrixXd covariance;
  int iterations = 0;
  double gradient_norm = 0.0;

  std::optional<double> theta() const;
  /// Parameter vector the optimizer works on.
  Eigen::VectorXd parameters() const;
  Eigen::VectorXd standard_errors() const;
};

struct HurdleFit {
  FittedModel zero_part;   // binomial_logit on 1(y > 0)
  FittedModel count_part;  // zero-truncated family on the positive rows
  double loglik = 0.0;
  int df = 0;
  double n_obs = 0.0;
};

struct MixtureFit {
  int K = 0;
  std::vector<FittedModel> components;  // sorted by mean fitted count
  Eigen::VectorXd mixing_weights;
  Eigen::MatrixXd posteriors;  // n x K, rows sum to 1
  Eigen::VectorXd posterior_sums;  // sum_i w_i * posterior_ik
  double loglik = 0.0;
  int df = 0;
  double n_obs = 0.0;
  std::vector<double> loglik_trace;  // per EM iteration of the chosen run
  int restart = 0;                   // index of the winning restart
  int restarts_failed = 0;
  int iterations = 0;
  bool converged = false;
};

struct FitOptions {
  int max_iterations = 200;
  double gradient_tolerance = 1e-6;
  double relative_tolerance = 1e-10;
  /// Starting parameters (coefficients[, log theta]); empty for defaults.
  Eigen::VectorXd start;
  bool compute_covariance = true;
};

struct MixtureOptions {
  int max_iterations = 500;
  double relative_tolerance = 1e-10;
  /// Allowed decrease of the log-likelihood between EM iterations,
  /// relative to max(1, |loglik|).
  double monotone_slack = 1e-8;
  double min_weight = 1e-6;
  FitOptions component;
};

struct InformationCriteria {
  double aic = 0.0;
  double bic = 0.0;
};

/// Weighted maximum likelihood for poisson, negbin (log link) or
/// binomial_logit (logit link). Poisson and logit use IRLS; negbin runs
/// Newton on (beta, log theta) from the Poisson solution.
FittedModel fit_glm(const DesignMatrix& design, const Eigen::VectorXd& response,
                    const Eigen::VectorXd& weights, Family family,
                    const FitOptions& options = {});

/// Zero-truncated poisson / negbin regression; every response must be >= 1.
/// `family` may be given as either the truncated or untruncated kind.
FittedModel fit_zerotrunc(const DesignMatrix& design,
                          const Eigen::VectorXd& response,
                          const Eigen::VectorXd& weights, Family family,
                          const FitOptions& options = {});

/// Logit hurdle for zero vs positive plus a zero-truncated count part fit
/// on the positive rows. `start`, when given, warm-starts both parts.
HurdleFit fit_hurdle(const DesignMatrix& count_design,
                     const DesignMatrix& zero_design,
                     const Eigen::VectorXd& response,
                     const Eigen::VectorXd& weights, Family count_family,
                     const FitOptions& options = {},
                     const HurdleFit* start = nullptr);

/// K-component negative binomial mixture regression by EM, best of
/// `restarts` runs. Restart 0 splits by response rank; the others start
/// from random posteriors seeded by derive_seed(seed, r).
MixtureFit fit_mixture(const DesignMatrix& design, const Eigen::VectorXd& response,
                       const Eigen::VectorXd& weights, int K, int restarts,
                       std::uint64_t seed, const MixtureOptions& options = {});

/// EM continued from an existing fit (used for bootstrap refits).
MixtureFit refit_mixture(const DesignMatrix& design, const Eigen::VectorXd& response,
                         const Eigen::VectorXd& weights, const MixtureFit& start,
                         const MixtureOptions& options = {});

InformationCriteria information_criteria(double loglik, int df, double n);

struct CovarianceResult {
  Eigen::MatrixXd covariance;
  Eigen::VectorXd standard_errors;
};

/// Inverse observed information at the fitted parameters, by central
/// differences of the score.
CovarianceResult model_covariance(const FittedModel& model,
                                  const DesignMatrix& design,
                                  const Eigen::VectorXd& response,
                                  const Eigen::VectorXd& weights);

FamilySpec predict_distribution(const FittedModel& model,
                                const Eigen::Ref<const Eigen::RowVectorXd>& row);
HurdleSpec predict_distribution(const HurdleFit& model,
                                const Eigen::Ref<const Eigen::RowVectorXd>& count_row,
                                const Eigen::Ref<const Eigen::RowVectorXd>& zero_row);
MixtureSpec predict_distribution(const MixtureFit& model,
                                 const Eigen::Ref<const Eigen::RowVectorXd>& row);

double predict_mean(const FittedModel& model,
                    const Eigen::Ref<const Eigen::RowVectorXd>& row);
double predict_mean(const HurdleFit& model,
                    const Eigen::Ref<const Eigen::RowVectorXd>& count_row,
                    const Eigen::Ref<const Eigen::RowVectorXd>& zero_row);
double predict_mean(const MixtureFit& model,
                    const Eigen::Ref<const Eigen::RowVectorXd>& row);

}  // namespace countdiag
