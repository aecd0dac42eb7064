#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "countdiag/error.hpp"
#include "countdiag/fit.hpp"
#include "countdiag/model.hpp"
#include "countdiag/table.hpp"
#include "oracle.hpp"

using namespace countdiag;
using namespace oracle;

namespace {

const std::string data_dir = COUNTDIAG_DATA_DIR;

void expect_matches_grid(const FittedModel& m, const std::vector<double>& oracle) {
  const auto p = m.parameters();
  ASSERT_EQ(static_cast<std::size_t>(p.size()), oracle.size());
  for (std::size_t k = 0; k < oracle.size(); ++k) {
    EXPECT_NEAR(p[static_cast<Eigen::Index>(k)], oracle[k], 2e-4) << "parameter " << k;
  }
}

DataTable crabs() { return read_table(data_dir + "/crabs.csv"); }

Model fit_crabs(ModelKind kind, const std::string& formula = "satellites ~ width + color") {
  ModelSpec spec;
  spec.kind = kind;
  spec.formula = parse_formula(formula);
  return Model::fit(spec, crabs());
}

void expect_psd(const Eigen::MatrixXd& c) {
  ASSERT_GT(c.rows(), 0);
  EXPECT_LT((c - c.transpose()).cwiseAbs().maxCoeff(), 1e-10);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (c + c.transpose()));
  EXPECT_GT(es.eigenvalues().minCoeff(), 0.0);
}

}  // namespace

TEST(FitGlm, ConstantResponseGivesLogMean) {
  const auto m = fit_glm(intercept_only(3), vec({2, 2, 2}), ones(3), Family::poisson);
  EXPECT_NEAR(m.coefficients[0], std::log(2.0), 1e-12);
  EXPECT_NEAR(m.fitted_means[1], 2.0, 1e-12);
  EXPECT_NEAR(predict_mean(m, Eigen::RowVectorXd::Ones(1)), 2.0, 1e-12);
}

TEST(FitGlm, LinkInversion) {
  FittedModel m;
  m.coefficients = Eigen::VectorXd::Constant(1, std::log(3.0));
  const auto f = predict_distribution(m, Eigen::RowVectorXd::Ones(1));
  EXPECT_EQ(f.kind, Family::poisson);
  EXPECT_NEAR(f.mean, 3.0, 1e-14);
  EXPECT_THROW(predict_mean(m, Eigen::RowVectorXd::Ones(2)), FitError);
}

TEST(FitGlm, PoissonMatchesGridSearch) {
  const auto m = fit_glm(toy_design(), vec(toy_counts), ones(10), Family::poisson);
  const auto oracle = grid_search(
      [](const std::vector<double>& p) { return oracle_loglik(Family::poisson, toy_counts, p); },
      {0.0, 0.0}, 4.0);
  expect_matches_grid(m, oracle);
  EXPECT_NEAR(m.loglik, oracle_loglik(Family::poisson, toy_counts, oracle), 1e-6);
}

TEST(FitGlm, LogitMatchesGridSearch) {
  const auto m = fit_glm(toy_design(), vec(toy_binary), ones(10), Family::binomial_logit);
  const auto oracle = grid_search(
      [](const std::vector<double>& p) {
        return oracle_loglik(Family::binomial_logit, toy_binary, p);
      },
      {0.0, 0.0}, 4.0);
  expect_matches_grid(m, oracle);
}

TEST(FitGlm, NegbinMatchesGridSearch) {
  const auto m = fit_glm(toy_design(), vec(toy_overdispersed), ones(10), Family::negbin);
  ASSERT_FALSE(m.theta_at_bound);
  const auto oracle = grid_search(
      [](const std::vector<double>& p) {
        return oracle_loglik(Family::negbin, toy_overdispersed, p);
      },
      {0.0, 0.0, 0.0}, 4.0);
  expect_matches_grid(m, oracle);
}

TEST(FitZerotrunc, PoissonMatchesGridSearch) {
  const auto m = fit_zerotrunc(toy_design(), vec(toy_positive), ones(10), Family::zt_poisson);
  const auto oracle = grid_search(
      [](const std::vector<double>& p) {
        return oracle_loglik(Family::zt_poisson, toy_positive, p);
      },
      {0.0, 0.0}, 4.0);
  expect_matches_grid(m, oracle);
}

TEST(FitZerotrunc, NegbinMatchesGridSearch) {
  const auto m = fit_zerotrunc(toy_design(), vec(toy_positive), ones(10), Family::zt_negbin);
  ASSERT_FALSE(m.theta_at_bound);
  const auto oracle = grid_search(
      [](const std::vector<double>& p) {
        return oracle_loglik(Family::zt_negbin, toy_positive, p);
      },
      {0.0, 0.0, 0.0}, 4.0);
  expect_matches_grid(m, oracle);
}

TEST(FitZerotrunc, TruncatedMeanEquation) {
  // mu / (1 - exp(-mu)) = mean(1, 2, 3) = 2, solved by bisection.
  double lo = 1e-6, hi = 10.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (mid / -std::expm1(-mid) < 2.0 ? lo : hi) = mid;
  }
  const auto m = fit_zerotrunc(intercept_only(3), vec({1, 2, 3}), ones(3), Family::zt_poisson);
  EXPECT_NEAR(std::exp(m.coefficients[0]), 0.5 * (lo + hi), 1e-8);
}

TEST(FitZerotrunc, RejectsZeros) {
  EXPECT_THROW(fit_zerotrunc(intercept_only(3), vec({1, 0, 3}), ones(3), Family::zt_poisson),
               DomainError);
}

TEST(FitGlm, ScoreEquations) {
  const auto t = crabs();
  const auto frame = build_design(parse_formula("satellites ~ width + color"), t);
  const auto m = fit_glm(frame.count, frame.response, ones(frame.response.size()),
                         Family::poisson);
  const Eigen::VectorXd resid = frame.response - m.fitted_means;
  EXPECT_LT((frame.count.values.transpose() * resid).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_LT(m.gradient_norm, 1e-6);
}

TEST(FitGlm, DoublingWeights) {
  const auto t = crabs();
  const auto frame = build_design(parse_formula("satellites ~ width + color"), t);
  const Eigen::Index n = frame.response.size();
  for (Family f : {Family::poisson, Family::negbin}) {
    const auto a = fit_glm(frame.count, frame.response, ones(n), f);
    const auto b = fit_glm(frame.count, frame.response, 2.0 * ones(n), f);
    EXPECT_NEAR(b.loglik, 2.0 * a.loglik, 1e-7);
    EXPECT_LT((a.parameters() - b.parameters()).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(FitGlm, CrabPoissonAndNegbin) {
  const auto pois = fit_crabs(ModelKind::poisson);
  EXPECT_EQ(pois.df(), 3);
  EXPECT_NEAR(pois.criteria().bic, 931.0, 0.15);
  const auto nb = fit_crabs(ModelKind::negbin);
  EXPECT_EQ(nb.df(), 4);
  EXPECT_NEAR(nb.criteria().bic, 769.5, 0.15);
  EXPECT_NEAR(*std::get<FittedModel>(nb.result()).theta(), 0.93, 0.01);
}

TEST(FitGlm, Errors) {
  auto d = toy_design();
  d.values.col(1) = d.values.col(0) * 2.0;
  EXPECT_THROW(fit_glm(d, vec(toy_counts), ones(10), Family::poisson), FitError);
  EXPECT_THROW(fit_glm(toy_design(), Eigen::VectorXd::Zero(10), ones(10), Family::poisson),
               FitError);
  const std::vector<double> separated{0, 0, 0, 0, 0, 1, 1, 1, 1, 1};
  EXPECT_THROW(fit_glm(toy_design(), vec(separated), ones(10), Family::binomial_logit), FitError);
  FitOptions opts;
  opts.max_iterations = 1;
  opts.start = Eigen::Vector3d(0.0, 0.0, 0.0);
  try {
    fit_glm(toy_design(), vec(toy_overdispersed), ones(10), Family::negbin, opts);
    FAIL() << "expected non-convergence";
  } catch (const ConvergenceError& e) {
    EXPECT_EQ(e.last_iterate().size(), 3u);
    EXPECT_GT(e.gradient_norm(), 0.0);
  }
}

TEST(FitHurdle, ZeroMassIdentity) {
  for (const char* formula : {"satellites ~ width + color", "satellites ~ 1 | width + color"}) {
    const auto m = fit_crabs(ModelKind::hurdle_negbin, formula);
    double implied = 0.0, observed = 0.0;
    const auto dists = m.distributions();
    for (std::size_t i = 0; i < dists.size(); ++i) {
      implied += dists[i].pmf(0);
      observed += m.response()[static_cast<Eigen::Index>(i)] == 0.0 ? 1.0 : 0.0;
    }
    EXPECT_NEAR(implied, observed, 1e-8) << formula;
  }
}

TEST(FitHurdle, CrabModelsAndCriteria) {
  const auto m1 = fit_crabs(ModelKind::hurdle_negbin);
  EXPECT_EQ(m1.df(), 7);
  EXPECT_NEAR(m1.criteria().bic, 736.8, 0.15);
  const auto& h = std::get<HurdleFit>(m1.result());
  EXPECT_NEAR(h.count_part.coefficients[0], 0.43, 0.02);
  EXPECT_NEAR(*h.count_part.log_theta, 1.53, 0.02);
  const auto se = h.zero_part.standard_errors();
  EXPECT_NEAR(se[0], 2.81, 0.02);
  EXPECT_NEAR(se[1], 0.10, 0.02);
  EXPECT_NEAR(se[2], 0.22, 0.02);
  expect_psd(h.zero_part.covariance);
  expect_psd(h.count_part.covariance);

  const auto m2 = fit_crabs(ModelKind::hurdle_negbin, "satellites ~ 1 | width + color");
  EXPECT_NEAR(m2.loglik(), -351.0, 0.05);
  EXPECT_NEAR(m2.criteria().aic, 712.1, 0.1);
  EXPECT_NEAR(m2.criteria().bic, 727.8, 0.1);
}

TEST(FitHurdle, PredictionsNonnegativeAcrossWidths) {
  const auto m = fit_crabs(ModelKind::hurdle_negbin);
  const auto& h = std::get<HurdleFit>(m.result());
  for (double width = 20.0; width <= 34.0; width += 0.5) {
    Eigen::RowVectorXd row(3);
    row << 1.0, width, 2.5;
    EXPECT_GE(predict_mean(h, row, row), 0.0);
  }
}

TEST(FitHurdle, NoZerosGivesTruncatedMean) {
  HurdleFit h;
  h.zero_part.family = Family::binomial_logit;
  h.zero_part.link = Link::logit;
  h.zero_part.coefficients = Eigen::VectorXd::Constant(1, 40.0);
  h.count_part.family = Family::zt_poisson;
  h.count_part.coefficients = Eigen::VectorXd::Constant(1, std::log(2.0));
  const Eigen::RowVectorXd row = Eigen::RowVectorXd::Ones(1);
  EXPECT_NEAR(predict_mean(h, row, row), 2.0 / -std::expm1(-2.0), 1e-12);
}

TEST(FitCovariance, PositiveDefinite) {
  for (auto kind : {ModelKind::poisson, ModelKind::negbin}) {
    const auto m = fit_crabs(kind);
    expect_psd(std::get<FittedModel>(m.result()).covariance);
  }
}

TEST(InformationCriteria, Arithmetic) {
  auto ic = information_criteria(-351.0, 5, 173);
  EXPECT_NEAR(ic.aic, 712.0, 1e-9);
  EXPECT_NEAR(ic.bic, 702.0 + 5.0 * std::log(173.0), 1e-9);
  EXPECT_NEAR(ic.bic, 727.8, 0.1);
  ic = information_criteria(-184.948, 10, 126);
  EXPECT_NEAR(ic.aic, 389.9, 0.1);
  EXPECT_NEAR(ic.bic, 418.3, 0.1);
  ic = information_criteria(0.0, 0, 10);
  EXPECT_EQ(ic.aic, 0.0);
  EXPECT_EQ(ic.bic, 0.0);
  EXPECT_THROW(information_criteria(1.0, 1, 0.0), DomainError);
}

TEST(FitMixture, SingleComponentIsNegbin) {
  const auto t = crabs();
  const auto frame = build_design(parse_formula("satellites ~ width + color"), t);
  const Eigen::Index n = frame.response.size();
  const auto nb = fit_glm(frame.count, frame.response, ones(n), Family::negbin);
  const auto mix = fit_mixture(frame.count, frame.response, ones(n), 1, 1, 3);
  ASSERT_EQ(mix.components.size(), 1u);
  EXPECT_NEAR(mix.loglik, nb.loglik, 1e-6);
  EXPECT_LT((mix.components[0].parameters() - nb.parameters()).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_EQ(mix.df, nb.df);
}

namespace {

// Weighted intercept-only NB: the mean is the weighted average, theta
// solves the profile score by bisection on log theta.
std::pair<double, double> scalar_nb_mle(const std::vector<double>& y,
                                        const std::vector<double>& w) {
  double sw = 0.0, swy = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    sw += w[i];
    swy += w[i] * y[i];
  }
  const double mu = swy / sw;
  auto score = [&](double lt) {
    const double th = std::exp(lt);
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      double digamma_diff = 0.0;  // psi(y + th) - psi(th) as a finite sum
      for (int k = 0; k < static_cast<int>(y[i]); ++k) digamma_diff += 1.0 / (th + k);
      s += w[i] * (digamma_diff + std::log(th / (th + mu)) + (mu - y[i]) / (th + mu));
    }
    return s;
  };
  double lo = std::log(1e-3), hi = std::log(1e6);
  if (score(hi) > 0.0) return {mu, std::exp(hi)};
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (score(mid) > 0.0 ? lo : hi) = mid;
  }
  return {mu, std::exp(0.5 * (lo + hi))};
}

}  // namespace

TEST(FitMixture, RecoversSyntheticComponents) {
  Rng rng(7);
  std::vector<double> y(500);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  for (auto& v : y) {
    const auto f = coin(rng) < 0.5 ? FamilySpec::negbin(1.0, 2.0) : FamilySpec::negbin(8.0, 5.0);
    v = static_cast<double>(count_sample(f, rng));
  }

  // Scalar two-point EM from a median split.
  std::vector<double> sorted = y;
  std::sort(sorted.begin(), sorted.end());
  const double median = sorted[sorted.size() / 2];
  std::vector<double> post(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) post[i] = y[i] <= median ? 0.9 : 0.1;
  std::pair<double, double> c1, c2;
  double pi1 = 0.5;
  for (int it = 0; it < 2000; ++it) {
    std::vector<double> w2(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) w2[i] = 1.0 - post[i];
    c1 = scalar_nb_mle(y, post);
    c2 = scalar_nb_mle(y, w2);
    pi1 = std::accumulate(post.begin(), post.end(), 0.0) / static_cast<double>(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
      const double a = std::log(pi1) + nb_log_pmf(y[i], c1.first, c1.second);
      const double b = std::log(1.0 - pi1) + nb_log_pmf(y[i], c2.first, c2.second);
      post[i] = 1.0 / (1.0 + std::exp(b - a));
    }
  }
  const double lo = std::min(c1.first, c2.first), hi = std::max(c1.first, c2.first);

  const auto mix = fit_mixture(intercept_only(500), vec(y), ones(500), 2, 5, 7);
  ASSERT_EQ(mix.components.size(), 2u);
  const double m1 = std::exp(mix.components[0].coefficients[0]);
  const double m2 = std::exp(mix.components[1].coefficients[0]);
  EXPECT_LT(m1, m2);
  EXPECT_NEAR(m1, lo, 0.15 * lo);
  EXPECT_NEAR(m2, hi, 0.15 * hi);
  EXPECT_NEAR(mix.posteriors.rowwise().sum().minCoeff(), 1.0, 1e-12);
  EXPECT_NEAR(mix.posteriors.rowwise().sum().maxCoeff(), 1.0, 1e-12);
  for (std::size_t k = 1; k < mix.loglik_trace.size(); ++k) {
    EXPECT_GE(mix.loglik_trace[k],
              mix.loglik_trace[k - 1] - 1e-8 * std::max(1.0, std::abs(mix.loglik_trace[k - 1])));
  }
}

TEST(FitMixture, SeedDeterminism) {
  Rng rng(3);
  std::vector<double> y(120);
  for (auto& v : y) {
    v = static_cast<double>(count_sample(FamilySpec::negbin(3.0, 1.0), rng));
  }
  const auto a = fit_mixture(intercept_only(120), vec(y), ones(120), 2, 3, 11);
  const auto b = fit_mixture(intercept_only(120), vec(y), ones(120), 2, 3, 11);
  EXPECT_EQ(a.loglik, b.loglik);
  EXPECT_EQ(a.restart, b.restart);
}

TEST(FitMixture, TooFewObservations) {
  EXPECT_THROW(fit_mixture(toy_design(), vec(toy_counts), ones(10), 4, 1, 1), FitError);
}
