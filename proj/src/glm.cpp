#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "countdiag/error.hpp"
#include "countdiag/fit.hpp"
#include "fit_detail.hpp"
#include "loglik.hpp"

namespace countdiag {

namespace detail {

void check_inputs(const DesignMatrix& design, const Eigen::VectorXd& response,
                  const Eigen::VectorXd& weights, const std::string& what) {
  const auto n = design.rows();
  const auto p = design.cols();
  if (p == 0) throw FitError(what + ": design has no columns");
  if (response.size() != n || weights.size() != n) {
    throw FitError(what + ": design has " + std::to_string(n) + " rows but response has " +
                   std::to_string(response.size()) + " and weights " +
                   std::to_string(weights.size()));
  }
  if (!design.values.allFinite()) throw FitError(what + ": design has non-finite entries");
  if ((weights.array() < 0.0).any() || !weights.allFinite()) {
    throw DomainError(what + ": weights must be nonnegative and finite");
  }
  if (weights.sum() <= 0.0) throw FitError(what + ": all weights are zero");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (response[i] < 0 || std::floor(response[i]) != response[i]) {
      throw DomainError(what + ": response must be a nonnegative integer (row " +
                        std::to_string(i + 1) + ")");
    }
  }
  Eigen::Index active = (weights.array() > 0.0).count();
  if (active < p) {
    throw FitError(what + ": " + std::to_string(active) +
                   " weighted observations for " + std::to_string(p) + " coefficients");
  }
  // Rank of the weighted design.
  Eigen::MatrixXd wx(active, p);
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (weights[i] > 0.0) wx.row(r++) = std::sqrt(weights[i]) * design.values.row(i);
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(wx);
  qr.setThreshold(1e-10);
  if (qr.rank() < p) {
    throw FitError(what + ": rank-deficient design (rank " + std::to_string(qr.rank()) +
                   " < " + std::to_string(p) + " columns)");
  }
}

double moment_log_theta(const Eigen::VectorXd& y, const Eigen::VectorXd& w) {
  const double sw = w.sum();
  const double mean = w.dot(y) / sw;
  const double var = w.dot((y.array() - mean).square().matrix()) / sw;
  const double theta = std::max(0.1, mean * mean / std::max(var - mean, 1e-4));
  return std::clamp(std::log(theta), log_theta_lower(), log_theta_upper());
}

OptimizeOptions optimizer_options(const FitOptions& options, Family family,
                                  Eigen::Index n_coefficients) {
  OptimizeOptions opt;
  opt.max_iterations = options.max_iterations;
  opt.gradient_tolerance = options.gradient_tolerance;
  opt.relative_tolerance = options.relative_tolerance;
  if (has_dispersion(family)) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    opt.lower = Eigen::VectorXd::Constant(n_coefficients + 1, -inf);
    opt.upper = Eigen::VectorXd::Constant(n_coefficients + 1, inf);
    opt.lower[n_coefficients] = log_theta_lower();
    opt.upper[n_coefficients] = log_theta_upper();
  }
  return opt;
}

Eigen::MatrixXd covariance_at(const Objective& objective, const Eigen::VectorXd& x,
                              const std::vector<bool>& pinned) {
  const Eigen::MatrixXd h = numerical_hessian(objective, x);
  std::vector<Eigen::Index> idx;
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    if (pinned.empty() || !pinned[static_cast<std::size_t>(k)]) idx.push_back(k);
  }
  const auto m = static_cast<Eigen::Index>(idx.size());
  Eigen::MatrixXd sub(m, m);
  for (Eigen::Index r = 0; r < m; ++r) {
    for (Eigen::Index c = 0; c < m; ++c) sub(r, c) = h(idx[r], idx[c]);
  }
  const Eigen::MatrixXd inv = invert_information(sub);
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(x.size(), x.size());
  for (Eigen::Index r = 0; r < m; ++r) {
    for (Eigen::Index c = 0; c < m; ++c) cov(idx[r], idx[c]) = inv(r, c);
  }
  return cov;
}

FittedModel finalize(Family family, const DesignMatrix& design,
                     const Eigen::VectorXd& response, const Eigen::VectorXd& weights,
                     const Objective& objective, const OptimizeResult& result,
                     const FitOptions& options) {
  const auto p = design.cols();
  FittedModel m;
  m.family = family;
  m.link = family == Family::binomial_logit ? Link::logit : Link::log;
  m.coefficients = result.x.head(p);
  m.coefficient_names = design.column_names;
  if (has_dispersion(family)) {
    m.log_theta = result.x[p];
    m.theta_at_bound = !result.at_bound.empty() && result.at_bound[static_cast<std::size_t>(p)];
  }
  m.loglik = result.value;
  m.df = static_cast<int>(result.x.size());
  m.n_obs = weights.sum();
  const Eigen::VectorXd eta = design.values * m.coefficients;
  if (m.link == Link::logit) {
    m.fitted_means = (1.0 + (-eta.array()).exp()).inverse().matrix();
  } else {
    m.fitted_means = eta.array().exp().matrix();
  }
  m.weights = weights;
  m.iterations = result.iterations;
  m.gradient_norm = result.gradient_norm;
  if (options.compute_covariance) {
    m.covariance = covariance_at(objective, result.x, result.at_bound);
  }
  (void)response;
  return m;
}

}  // namespace detail

std::optional<double> FittedModel::theta() const {
  if (!log_theta) return std::nullopt;
  return std::exp(*log_theta);
}

Eigen::VectorXd FittedModel::parameters() const {
  if (!log_theta) return coefficients;
  Eigen::VectorXd x(coefficients.size() + 1);
  x << coefficients, *log_theta;
  return x;
}

Eigen::VectorXd FittedModel::standard_errors() const {
  if (covariance.size() == 0) return {};
  return covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
}

namespace {

// Starting coefficients for canonical-link IRLS: one weighted least squares
// solve on the working response at a smoothed mean.
Eigen::VectorXd irls_start(const DesignMatrix& design, const Eigen::VectorXd& y,
                           const Eigen::VectorXd& w, Family family) {
  const Eigen::Index n = y.size();
  Eigen::VectorXd eta(n), working_w(n), z(n);
  const double ybar = w.dot(y) / w.sum();
  for (Eigen::Index i = 0; i < n; ++i) {
    double mu;
    if (family == Family::binomial_logit) {
      mu = (y[i] + 0.5) / 2.0;
      eta[i] = std::log(mu / (1.0 - mu));
      working_w[i] = w[i] * mu * (1.0 - mu);
      z[i] = eta[i] + (y[i] - mu) / (mu * (1.0 - mu));
    } else {
      mu = 0.5 * (y[i] + ybar) + 0.1;
      eta[i] = std::log(mu);
      working_w[i] = w[i] * mu;
      z[i] = eta[i] + (y[i] - mu) / mu;
    }
  }
  const Eigen::MatrixXd& X = design.values;
  const Eigen::MatrixXd xtwx = X.transpose() * working_w.asDiagonal() * X;
  const Eigen::VectorXd xtwz = X.transpose() * (working_w.array() * z.array()).matrix();
  return xtwx.ldlt().solve(xtwz);
}

void check_family_response(const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                           Family family) {
  double positive = 0.0, total = w.sum();
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (family == Family::binomial_logit && y[i] > 1.0) {
      throw DomainError("binomial_logit response must be 0 or 1");
    }
    if (y[i] > 0) positive += w[i];
  }
  if (positive == 0.0) {
    throw FitError("all weighted responses are zero; the log-likelihood has no maximum");
  }
  if (family == Family::binomial_logit && positive == total) {
    throw FitError("binomial_logit response has no zeros; complete separation");
  }
}

void check_separation(const FittedModel& m, const Eigen::VectorXd& y,
                      const Eigen::VectorXd& w) {
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (w[i] <= 0.0) continue;
    const double p = m.fitted_means[i];
    const double p_obs = y[i] > 0 ? p : 1.0 - p;
    if (p_obs < 1.0 - 1e-8) return;
  }
  throw FitError("complete separation: fitted probabilities are numerically 0 or 1");
}

}  // namespace

FittedModel fit_glm(const DesignMatrix& design, const Eigen::VectorXd& response,
                    const Eigen::VectorXd& weights, Family family,
                    const FitOptions& options) {
  if (is_zero_truncated(family)) {
    return fit_zerotrunc(design, response, weights, family, options);
  }
  detail::check_inputs(design, response, weights, std::string(family_name(family)) + " fit");
  check_family_response(response, weights, family);
  const auto p = design.cols();

  if (family == Family::negbin) {
    Eigen::VectorXd start;
    if (options.start.size() == p + 1) {
      start = options.start;
    } else {
      FitOptions pois = options;
      pois.compute_covariance = false;
      pois.start = options.start.size() == p ? options.start : Eigen::VectorXd{};
      const FittedModel base = fit_glm(design, response, weights, Family::poisson, pois);
      start.resize(p + 1);
      start << base.coefficients, detail::moment_log_theta(response, weights);
    }
    const Objective obj = detail::make_objective(family, design.values, response, weights);
    const auto result = maximize(obj, start, detail::optimizer_options(options, family, p));
    return detail::finalize(family, design, response, weights, obj, result, options);
  }

  const Eigen::VectorXd start = options.start.size() == p
                                    ? options.start
                                    : irls_start(design, response, weights, family);
  // Newton on a canonical link is IRLS: the observed and expected
  // information coincide.
  const Objective obj = detail::make_objective(family, design.values, response, weights);
  const auto result = maximize(obj, start, detail::optimizer_options(options, family, p));
  FittedModel m = detail::finalize(family, design, response, weights, obj, result, options);
  if (family == Family::binomial_logit) check_separation(m, response, weights);
  return m;
}

InformationCriteria information_criteria(double loglik, int df, double n) {
  if (!(n > 0.0)) throw DomainError("information criteria need n > 0");
  return {-2.0 * loglik + 2.0 * df, -2.0 * loglik + df * std::log(n)};
}

CovarianceResult model_covariance(const FittedModel& model, const DesignMatrix& design,
                                  const Eigen::VectorXd& response,
                                  const Eigen::VectorXd& weights) {
  if (design.cols() != model.coefficients.size()) {
    throw FitError("design does not match the model's coefficients");
  }
  const Objective obj =
      detail::make_objective(model.family, design.values, response, weights);
  std::vector<bool> pinned(static_cast<std::size_t>(model.parameters().size()), false);
  if (model.theta_at_bound) pinned.back() = true;
  CovarianceResult out;
  out.covariance = detail::covariance_at(obj, model.parameters(), pinned);
  out.standard_errors = out.covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
  return out;
}

FamilySpec predict_distribution(const FittedModel& model,
                                const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  if (row.size() != model.coefficients.size()) {
    throw FitError("covariate row has " + std::to_string(row.size()) +
                   " entries, model has " + std::to_string(model.coefficients.size()) +
                   " coefficients");
  }
  const double eta = (row * model.coefficients)(0);
  FamilySpec f;
  f.kind = model.family;
  f.mean = model.link == Link::logit ? 1.0 / (1.0 + std::exp(-eta)) : std::exp(eta);
  f.theta = model.theta();
  return f;
}

double predict_mean(const FittedModel& model,
                    const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  return family_mean(predict_distribution(model, row));
}

}  // namespace countdiag
