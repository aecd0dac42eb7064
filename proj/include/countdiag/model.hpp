#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "countdiag/fit.hpp"
#include "countdiag/formula.hpp"
#include "countdiag/predictive.hpp"
#include "countdiag/table.hpp"

namespace countdiag {

enum class ModelKind { poisson, negbin, hurdle_poisson, hurdle_negbin, mixture_negbin };

/// "poisson", "negbin", "hurdle-poisson", "hurdle-negbin", "mixture-negbin".
std::string_view model_kind_name(ModelKind kind);
/// Inverse of model_kind_name; throws ConfigError for unknown names.
ModelKind parse_model_kind(std::string_view name);

inline constexpr std::uint64_t default_seed = 20160906;

struct ModelSpec {
  ModelKind kind = ModelKind::poisson;
  FormulaAst formula;
  int K = 2;         // mixture only
  int restarts = 5;  // mixture only
  std::uint64_t seed = default_seed;
};

/// A fitted model together with the data it was fitted on, so it can hand
/// out per-observation distributions and be refitted on new responses.
class Model {
 public:
  using Fit = std::variant<FittedModel, HurdleFit, MixtureFit>;

  /// `weights` empty means unit weights.
  static Model fit(const ModelSpec& spec, const DataTable& table,
                   const Eigen::VectorXd& weights = {});

  const ModelSpec& spec() const noexcept { return spec_; }
  ModelKind kind() const noexcept { return spec_.kind; }
  std::string name() const;
  const Fit& result() const noexcept { return fit_; }
  const ModelFrame& frame() const noexcept { return frame_; }
  const Eigen::VectorXd& response() const noexcept { return frame_.response; }
  const Eigen::VectorXd& weights() const noexcept { return weights_; }

  double loglik() const;
  int df() const;
  double n_obs() const;
  InformationCriteria criteria() const;

  /// Fitted distribution of every training row.
  std::vector<CountDistribution> distributions() const;
  /// Fitted distributions for the rows of another table with the same
  /// covariate columns.
  std::vector<CountDistribution> distributions(const DataTable& table) const;
  /// Fitted means of the training rows.
  Eigen::VectorXd means() const;

  /// Same specification, design and weights with a new response,
  /// warm-started at the current estimates. No covariance is computed.
  Model refit(const Eigen::VectorXd& response) const;

 private:
  Model(ModelSpec spec, ModelFrame frame, Eigen::VectorXd weights, Fit fit)
      : spec_(std::move(spec)),
        frame_(std::move(frame)),
        weights_(std::move(weights)),
        fit_(std::move(fit)) {}

  std::vector<CountDistribution> distributions_for(const DesignMatrix& count,
                                                   const DesignMatrix& zero) const;

  ModelSpec spec_;
  ModelFrame frame_;
  Eigen::VectorXd weights_;
  Fit fit_;
};

}  // namespace countdiag
