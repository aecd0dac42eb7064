#include "countdiag/model.hpp"

#include <array>
#include <string>
#include <utility>

#include "countdiag/error.hpp"

namespace countdiag {

namespace {

constexpr std::array<std::pair<ModelKind, std::string_view>, 5> kind_names{{
    {ModelKind::poisson, "poisson"},
    {ModelKind::negbin, "negbin"},
    {ModelKind::hurdle_poisson, "hurdle-poisson"},
    {ModelKind::hurdle_negbin, "hurdle-negbin"},
    {ModelKind::mixture_negbin, "mixture-negbin"},
}};

bool is_hurdle(ModelKind k) {
  return k == ModelKind::hurdle_poisson || k == ModelKind::hurdle_negbin;
}

Family count_family(ModelKind k) {
  return k == ModelKind::poisson || k == ModelKind::hurdle_poisson ? Family::poisson
                                                                    : Family::negbin;
}

const DesignMatrix& zero_design(const ModelFrame& f) { return f.zero ? *f.zero : f.count; }

Model::Fit run_fit(const ModelSpec& spec, const ModelFrame& frame, const Eigen::VectorXd& w,
                   const Model::Fit* warm) {
  FitOptions opts;
  opts.compute_covariance = warm == nullptr;
  switch (spec.kind) {
    case ModelKind::poisson:
    case ModelKind::negbin:
      if (warm) opts.start = std::get<FittedModel>(*warm).parameters();
      return fit_glm(frame.count, frame.response, w, count_family(spec.kind), opts);
    case ModelKind::hurdle_poisson:
    case ModelKind::hurdle_negbin:
      return fit_hurdle(frame.count, zero_design(frame), frame.response, w,
                        count_family(spec.kind), opts,
                        warm ? &std::get<HurdleFit>(*warm) : nullptr);
    case ModelKind::mixture_negbin: {
      MixtureOptions mo;
      mo.component.compute_covariance = warm == nullptr;
      if (warm) return refit_mixture(frame.count, frame.response, w, std::get<MixtureFit>(*warm), mo);
      return fit_mixture(frame.count, frame.response, w, spec.K, spec.restarts, spec.seed, mo);
    }
  }
  throw ConfigError("unknown model kind");
}

}  // namespace

std::string_view model_kind_name(ModelKind kind) {
  for (const auto& [k, name] : kind_names) {
    if (k == kind) return name;
  }
  return "unknown";
}

ModelKind parse_model_kind(std::string_view name) {
  for (const auto& [k, n] : kind_names) {
    if (n == name) return k;
  }
  throw ConfigError("unknown family '" + std::string(name) +
                    "' (expected poisson, negbin, hurdle-poisson, hurdle-negbin or "
                    "mixture-negbin)");
}

Model Model::fit(const ModelSpec& spec, const DataTable& table, const Eigen::VectorXd& weights) {
  if (spec.formula.zero_part && !is_hurdle(spec.kind)) {
    throw ConfigError("the '|' zero-part formula only applies to hurdle families");
  }
  ModelFrame frame = build_design(spec.formula, table);
  Eigen::VectorXd w = weights.size() == 0
                          ? Eigen::VectorXd::Ones(frame.response.size())
                          : weights;
  if (w.size() != frame.response.size()) {
    throw DataError("weights have " + std::to_string(w.size()) + " entries for " +
                    std::to_string(frame.response.size()) + " rows");
  }
  Fit f = run_fit(spec, frame, w, nullptr);
  return Model(spec, std::move(frame), std::move(w), std::move(f));
}

std::string Model::name() const { return std::string(model_kind_name(spec_.kind)); }

double Model::loglik() const {
  return std::visit([](const auto& f) { return f.loglik; }, fit_);
}

int Model::df() const {
  return std::visit([](const auto& f) { return f.df; }, fit_);
}

double Model::n_obs() const {
  return std::visit([](const auto& f) { return f.n_obs; }, fit_);
}

InformationCriteria Model::criteria() const {
  return information_criteria(loglik(), df(), n_obs());
}

std::vector<CountDistribution> Model::distributions_for(const DesignMatrix& count,
                                                        const DesignMatrix& zero) const {
  std::vector<CountDistribution> out;
  out.reserve(static_cast<std::size_t>(count.rows()));
  for (Eigen::Index i = 0; i < count.rows(); ++i) {
    const auto row = count.values.row(i);
    if (const auto* g = std::get_if<FittedModel>(&fit_)) {
      out.emplace_back(predict_distribution(*g, row));
    } else if (const auto* h = std::get_if<HurdleFit>(&fit_)) {
      out.emplace_back(predict_distribution(*h, row, zero.values.row(i)));
    } else {
      out.emplace_back(predict_distribution(std::get<MixtureFit>(fit_), row));
    }
  }
  return out;
}

std::vector<CountDistribution> Model::distributions() const {
  return distributions_for(frame_.count, zero_design(frame_));
}

std::vector<CountDistribution> Model::distributions(const DataTable& table) const {
  const DesignMatrix count = build_terms(spec_.formula.rhs, table);
  if (count.column_names != frame_.count.column_names) {
    throw DataError("table columns do not match the model's design");
  }
  if (spec_.formula.zero_part) {
    const DesignMatrix zero = build_terms(*spec_.formula.zero_part, table);
    if (zero.column_names != frame_.zero->column_names) {
      throw DataError("table columns do not match the model's zero-part design");
    }
    return distributions_for(count, zero);
  }
  return distributions_for(count, count);
}

Eigen::VectorXd Model::means() const {
  const auto d = distributions();
  Eigen::VectorXd m(static_cast<Eigen::Index>(d.size()));
  for (std::size_t i = 0; i < d.size(); ++i) m[static_cast<Eigen::Index>(i)] = d[i].mean();
  return m;
}

Model Model::refit(const Eigen::VectorXd& response) const {
  if (response.size() != frame_.response.size()) {
    throw DataError("refit response has the wrong length");
  }
  ModelFrame frame = frame_;
  frame.response = response;
  Fit f = run_fit(spec_, frame, weights_, &fit_);
  return Model(spec_, std::move(frame), weights_, std::move(f));
}

}  // namespace countdiag
