#include <cmath>
#include <string>
#include <vector>

#include "countdiag/error.hpp"
#include "countdiag/fit.hpp"

namespace countdiag {

HurdleFit fit_hurdle(const DesignMatrix& count_design, const DesignMatrix& zero_design,
                     const Eigen::VectorXd& response, const Eigen::VectorXd& weights,
                     Family count_family, const FitOptions& options,
                     const HurdleFit* start) {
  const Eigen::Index n = response.size();
  if (count_design.rows() != n || zero_design.rows() != n || weights.size() != n) {
    throw FitError("hurdle fit: count design, zero design, response and weights differ in length");
  }
  if (count_family == Family::binomial_logit) {
    throw FitError("hurdle count part must be poisson or negbin");
  }

  double zeros = 0.0, positives = 0.0;
  std::vector<Eigen::Index> pos_rows;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (response[i] > 0) {
      positives += weights[i];
      pos_rows.push_back(i);
    } else {
      zeros += weights[i];
    }
  }
  if (zeros <= 0.0 || positives <= 0.0) {
    throw FitError("hurdle fit needs at least one zero and one positive response");
  }

  HurdleFit fit;
  FitOptions zero_opts = options;
  if (start) zero_opts.start = start->zero_part.parameters();
  const Eigen::VectorXd indicator = (response.array() > 0.0).cast<double>();
  fit.zero_part = fit_glm(zero_design, indicator, weights, Family::binomial_logit, zero_opts);

  const auto m = static_cast<Eigen::Index>(pos_rows.size());
  DesignMatrix pos_design;
  pos_design.values.resize(m, count_design.cols());
  pos_design.column_names = count_design.column_names;
  pos_design.has_intercept = count_design.has_intercept;
  Eigen::VectorXd pos_y(m), pos_w(m);
  for (Eigen::Index r = 0; r < m; ++r) {
    pos_design.values.row(r) = count_design.values.row(pos_rows[r]);
    pos_y[r] = response[pos_rows[r]];
    pos_w[r] = weights[pos_rows[r]];
  }
  FitOptions count_opts = options;
  if (start) count_opts.start = start->count_part.parameters();
  fit.count_part = fit_zerotrunc(pos_design, pos_y, pos_w, count_family, count_opts);

  fit.loglik = fit.zero_part.loglik + fit.count_part.loglik;
  fit.df = fit.zero_part.df + fit.count_part.df;
  fit.n_obs = weights.sum();
  return fit;
}

HurdleSpec predict_distribution(const HurdleFit& model,
                                const Eigen::Ref<const Eigen::RowVectorXd>& count_row,
                                const Eigen::Ref<const Eigen::RowVectorXd>& zero_row) {
  HurdleSpec h;
  h.zero_prob = 1.0 - predict_distribution(model.zero_part, zero_row).mean;
  h.count = predict_distribution(model.count_part, count_row);
  return h;
}

double predict_mean(const HurdleFit& model,
                    const Eigen::Ref<const Eigen::RowVectorXd>& count_row,
                    const Eigen::Ref<const Eigen::RowVectorXd>& zero_row) {
  const HurdleSpec h = predict_distribution(model, count_row, zero_row);
  return (1.0 - h.zero_prob) * family_mean(h.count);
}

}  // namespace countdiag
