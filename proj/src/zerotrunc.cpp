#include <string>

#include "countdiag/error.hpp"
#include "countdiag/fit.hpp"
#include "fit_detail.hpp"
#include "loglik.hpp"

namespace countdiag {

FittedModel fit_zerotrunc(const DesignMatrix& design, const Eigen::VectorXd& response,
                          const Eigen::VectorXd& weights, Family family,
                          const FitOptions& options) {
  if (family == Family::binomial_logit) {
    throw DomainError("binomial_logit has no zero-truncated form");
  }
  const Family kind = truncated(family);
  for (Eigen::Index i = 0; i < response.size(); ++i) {
    if (response[i] == 0) {
      throw DomainError("zero-truncated fit: response is 0 at row " + std::to_string(i + 1));
    }
  }
  detail::check_inputs(design, response, weights, std::string(family_name(kind)) + " fit");
  const auto p = design.cols();
  const Eigen::Index n_par = has_dispersion(kind) ? p + 1 : p;

  Eigen::VectorXd start;
  if (options.start.size() == n_par) {
    start = options.start;
  } else {
    FitOptions base_opts = options;
    base_opts.compute_covariance = false;
    base_opts.start = options.start.size() == p ? options.start : Eigen::VectorXd{};
    const FittedModel base =
        fit_glm(design, response, weights, Family::poisson, base_opts);
    start = base.coefficients;
    if (has_dispersion(kind)) {
      start.conservativeResize(p + 1);
      start[p] = detail::moment_log_theta(response, weights);
    }
  }

  const Objective obj = detail::make_objective(kind, design.values, response, weights);
  const auto result = maximize(obj, start, detail::optimizer_options(options, kind, p));
  return detail::finalize(kind, design, response, weights, obj, result, options);
}

}  // namespace countdiag
