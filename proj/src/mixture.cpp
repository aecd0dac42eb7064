#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "countdiag/error.hpp"
#include "countdiag/fit.hpp"
#include "fit_detail.hpp"
#include "loglik.hpp"

namespace countdiag {

namespace {

struct EmState {
  std::vector<FittedModel> components;
  Eigen::VectorXd pi;
  Eigen::MatrixXd post;
  double loglik = 0.0;
  std::vector<double> trace;
  int iterations = 0;
  bool converged = false;
};

// Log-likelihood and posteriors at fixed component parameters.
double e_step(const DesignMatrix& design, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
              const std::vector<FittedModel>& comps, const Eigen::VectorXd& pi,
              Eigen::MatrixXd& post) {
  const Eigen::Index n = y.size();
  const auto K = static_cast<Eigen::Index>(comps.size());
  Eigen::MatrixXd lp(n, K);
  for (Eigen::Index k = 0; k < K; ++k) {
    const auto& c = comps[static_cast<std::size_t>(k)];
    const Eigen::VectorXd mu = (design.values * c.coefficients).array().exp().matrix();
    lp.col(k) = detail::log_density(Family::negbin, y, mu, *c.theta()).array() +
                std::log(pi[k]);
  }
  post.resize(n, K);
  double ll = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double mx = lp.row(i).maxCoeff();
    if (!std::isfinite(mx)) {
      throw FitError("mixture: observation " + std::to_string(i + 1) +
                     " has zero likelihood under every component");
    }
    const Eigen::RowVectorXd e = (lp.row(i).array() - mx).exp();
    const double s = e.sum();
    post.row(i) = e / s;
    ll += w[i] * (mx + std::log(s));
  }
  return ll;
}

std::vector<FittedModel> m_step(const DesignMatrix& design, const Eigen::VectorXd& y,
                                const Eigen::VectorXd& w, const Eigen::MatrixXd& post,
                                const std::vector<FittedModel>* previous,
                                const MixtureOptions& options, Eigen::VectorXd& pi) {
  const auto K = post.cols();
  std::vector<FittedModel> comps;
  pi.resize(K);
  const double total = w.sum();
  for (Eigen::Index k = 0; k < K; ++k) {
    const Eigen::VectorXd wk = w.cwiseProduct(post.col(k));
    pi[k] = wk.sum() / total;
    if (pi[k] < options.min_weight) {
      throw FitError("mixture component " + std::to_string(k + 1) +
                     " is degenerate (mixing weight " + std::to_string(pi[k]) + ")");
    }
    FitOptions opts = options.component;
    opts.compute_covariance = false;
    if (previous) opts.start = (*previous)[static_cast<std::size_t>(k)].parameters();
    comps.push_back(fit_glm(design, y, wk, Family::negbin, opts));
  }
  return comps;
}

void check_monotone(double previous, double current, const MixtureOptions& options,
                    int iteration) {
  if (current < previous - options.monotone_slack * std::max(1.0, std::abs(previous))) {
    throw FitError("EM log-likelihood decreased at iteration " + std::to_string(iteration) +
                   " (" + std::to_string(previous) + " -> " + std::to_string(current) + ")");
  }
}

// EM from initial posteriors; `warm` seeds the first M-step's optimizers.
EmState run_em(const DesignMatrix& design, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
               Eigen::MatrixXd post, const std::vector<FittedModel>* warm,
               const MixtureOptions& options) {
  EmState s;
  s.post = std::move(post);
  const std::vector<FittedModel>* prev = warm;
  for (int it = 1; it <= options.max_iterations; ++it) {
    s.components = m_step(design, y, w, s.post, prev, options, s.pi);
    prev = &s.components;
    const double ll = e_step(design, y, w, s.components, s.pi, s.post);
    s.iterations = it;
    if (!s.trace.empty()) {
      const double last = s.trace.back();
      check_monotone(last, ll, options, it);
      s.trace.push_back(ll);
      s.loglik = ll;
      if (std::abs(ll - last) / std::max(1.0, std::abs(ll)) < options.relative_tolerance) {
        s.converged = true;
        break;
      }
    } else {
      s.trace.push_back(ll);
      s.loglik = ll;
    }
  }
  return s;
}

Eigen::MatrixXd median_split(const Eigen::VectorXd& y, int K) {
  const Eigen::Index n = y.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return y[a] < y[b]; });
  Eigen::MatrixXd post = Eigen::MatrixXd::Zero(n, K);
  if (K == 1) {
    post.setOnes();
    return post;
  }
  const double off = 0.1 / (K - 1);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto g = static_cast<Eigen::Index>((r * K) / n);
    post.row(order[static_cast<std::size_t>(r)]).setConstant(off);
    post(order[static_cast<std::size_t>(r)], g) = 0.9;
  }
  return post;
}

// Posterior rows drawn uniformly from the simplex.
Eigen::MatrixXd random_posteriors(const Eigen::VectorXd& y, int K, std::uint64_t seed) {
  Eigen::MatrixXd post = Eigen::MatrixXd::Ones(y.size(), K);
  if (K == 1) return post;
  Rng rng(seed);
  std::exponential_distribution<double> expo(1.0);
  for (Eigen::Index i = 0; i < post.rows(); ++i) {
    Eigen::RowVectorXd e(K);
    for (int k = 0; k < K; ++k) e[k] = expo(rng);
    post.row(i) = e / e.sum();
  }
  return post;
}

MixtureFit finish(const DesignMatrix& design, const Eigen::VectorXd& y,
                  const Eigen::VectorXd& w, EmState s, const MixtureOptions& options) {
  const auto K = static_cast<int>(s.components.size());
  std::vector<int> order(static_cast<std::size_t>(K));
  std::iota(order.begin(), order.end(), 0);
  // Order by the component's intercept prediction (mean fitted count when
  // there is no intercept column).
  std::vector<double> key(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k) {
    const auto& c = s.components[static_cast<std::size_t>(k)];
    key[static_cast<std::size_t>(k)] =
        design.has_intercept ? c.coefficients[0] : std::log(c.fitted_means.mean());
  }
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return key[static_cast<std::size_t>(a)] < key[static_cast<std::size_t>(b)];
  });

  MixtureFit fit;
  fit.K = K;
  fit.mixing_weights.resize(K);
  fit.posteriors.resize(s.post.rows(), K);
  for (int k = 0; k < K; ++k) {
    const int src = order[static_cast<std::size_t>(k)];
    fit.components.push_back(s.components[static_cast<std::size_t>(src)]);
    fit.mixing_weights[k] = s.pi[src];
    fit.posteriors.col(k) = s.post.col(src);
  }
  fit.posterior_sums = fit.posteriors.transpose() * w;
  fit.loglik = s.loglik;
  const auto p = static_cast<int>(design.cols());
  fit.df = K * (p + 1) + (K - 1);
  fit.n_obs = w.sum();
  fit.loglik_trace = std::move(s.trace);
  fit.iterations = s.iterations;
  fit.converged = s.converged;

  if (options.component.compute_covariance) {
    for (int k = 0; k < K; ++k) {
      auto& c = fit.components[static_cast<std::size_t>(k)];
      const Eigen::VectorXd wk = w.cwiseProduct(fit.posteriors.col(k));
      c.covariance = model_covariance(c, design, y, wk).covariance;
    }
  }
  return fit;
}

void check_mixture_inputs(const DesignMatrix& design, const Eigen::VectorXd& y,
                          const Eigen::VectorXd& w, int K) {
  if (K < 1) throw FitError("mixture needs K >= 1");
  detail::check_inputs(design, y, w, "mixture fit");
  const Eigen::Index need = static_cast<Eigen::Index>(K) * (design.cols() + 1);
  if (need >= y.size()) {
    throw FitError("mixture with K = " + std::to_string(K) + " has " + std::to_string(need) +
                   " component parameters for " + std::to_string(y.size()) + " observations");
  }
}

}  // namespace

MixtureFit fit_mixture(const DesignMatrix& design, const Eigen::VectorXd& response,
                       const Eigen::VectorXd& weights, int K, int restarts,
                       std::uint64_t seed, const MixtureOptions& options) {
  check_mixture_inputs(design, response, weights, K);
  if (restarts < 1) throw FitError("mixture needs at least one restart");

  std::optional<EmState> best;
  int best_index = -1, failed = 0;
  std::string last_error;
  for (int r = 0; r < restarts; ++r) {
    const Eigen::MatrixXd init =
        r == 0 ? median_split(response, K)
               : random_posteriors(response, K, derive_seed(seed, static_cast<std::uint64_t>(r)));
    try {
      EmState s = run_em(design, response, weights, init, nullptr, options);
      if (!best || s.loglik > best->loglik) {
        best = std::move(s);
        best_index = r;
      }
    } catch (const FitError& e) {
      ++failed;
      last_error = e.what();
    }
  }
  if (!best) {
    throw FitError("all " + std::to_string(restarts) + " mixture restarts failed; last: " +
                   last_error);
  }
  MixtureFit fit = finish(design, response, weights, std::move(*best), options);
  fit.restart = best_index;
  fit.restarts_failed = failed;
  return fit;
}

MixtureFit refit_mixture(const DesignMatrix& design, const Eigen::VectorXd& response,
                         const Eigen::VectorXd& weights, const MixtureFit& start,
                         const MixtureOptions& options) {
  check_mixture_inputs(design, response, weights, start.K);
  Eigen::MatrixXd post;
  e_step(design, response, weights, start.components, start.mixing_weights, post);
  EmState s = run_em(design, response, weights, post, &start.components, options);
  return finish(design, response, weights, std::move(s), options);
}

MixtureSpec predict_distribution(const MixtureFit& model,
                                 const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  MixtureSpec m;
  for (int k = 0; k < model.K; ++k) {
    m.components.push_back(
        {model.mixing_weights[k], predict_distribution(model.components[static_cast<std::size_t>(k)], row)});
  }
  return m;
}

double predict_mean(const MixtureFit& model, const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  double m = 0.0;
  for (int k = 0; k < model.K; ++k) {
    m += model.mixing_weights[k] *
         predict_mean(model.components[static_cast<std::size_t>(k)], row);
  }
  return m;
}

}  // namespace countdiag
