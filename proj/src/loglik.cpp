#include "loglik.hpp"

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>
#include <cmath>
#include <limits>
#include <memory>

#include "countdiag/error.hpp"

namespace countdiag::detail {

namespace {

constexpr double neg_inf = -std::numeric_limits<double>::infinity();
constexpr long small_count = 200;

// log Gamma(y + theta) - log Gamma(theta)
double log_rising(double theta, double y) {
  const long n = static_cast<long>(y);
  if (n <= small_count) {
    double s = 0.0;
    for (long k = 0; k < n; ++k) s += std::log(theta + static_cast<double>(k));
    return s;
  }
  return boost::math::lgamma(theta + y) - boost::math::lgamma(theta);
}

// psi(y + theta) - psi(theta)
double digamma_diff(double theta, double y) {
  const long n = static_cast<long>(y);
  if (n <= small_count) {
    double s = 0.0;
    for (long k = 0; k < n; ++k) s += 1.0 / (theta + static_cast<double>(k));
    return s;
  }
  return boost::math::digamma(theta + y) - boost::math::digamma(theta);
}

// psi'(y + theta) - psi'(theta)
double trigamma_diff(double theta, double y) {
  const long n = static_cast<long>(y);
  if (n <= small_count) {
    double s = 0.0;
    for (long k = 0; k < n; ++k) {
      const double d = theta + static_cast<double>(k);
      s -= 1.0 / (d * d);
    }
    return s;
  }
  return boost::math::trigamma(theta + y) - boost::math::trigamma(theta);
}

double softplus(double x) {
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

Eigen::VectorXd log_factorials(const Eigen::VectorXd& y) {
  Eigen::VectorXd out(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) out[i] = boost::math::lgamma(y[i] + 1.0);
  return out;
}

struct Problem {
  Family family;
  const Eigen::MatrixXd& X;
  const Eigen::VectorXd& y;
  const Eigen::VectorXd& w;
  Eigen::VectorXd lfact;
};

double eval_poisson(const Problem& pr, const Eigen::VectorXd& b, Eigen::VectorXd* g,
                    bool truncated) {
  const Eigen::VectorXd eta = pr.X * b;
  Eigen::VectorXd s(eta.size());
  double ll = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    const double mu = std::exp(eta[i]);
    const double y = pr.y[i];
    double li = y * eta[i] - mu - pr.lfact[i];
    double si = y - mu;
    if (truncated) {
      const double pos = -std::expm1(-mu);
      li -= std::log(pos);
      si = y - mu / pos;
    }
    ll += pr.w[i] * li;
    s[i] = pr.w[i] * si;
  }
  if (g) *g = pr.X.transpose() * s;
  return ll;
}

double eval_logit(const Problem& pr, const Eigen::VectorXd& b, Eigen::VectorXd* g) {
  const Eigen::VectorXd eta = pr.X * b;
  Eigen::VectorXd s(eta.size());
  double ll = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    const double p = 1.0 / (1.0 + std::exp(-eta[i]));
    ll += pr.w[i] * (pr.y[i] * eta[i] - softplus(eta[i]));
    s[i] = pr.w[i] * (pr.y[i] - p);
  }
  if (g) *g = pr.X.transpose() * s;
  return ll;
}

double eval_negbin(const Problem& pr, const Eigen::VectorXd& par, Eigen::VectorXd* g,
                   bool truncated) {
  const auto p = pr.X.cols();
  const double tau = par[p];
  const double theta = std::exp(tau);
  const Eigen::VectorXd eta = pr.X * par.head(p);
  Eigen::VectorXd s(eta.size());
  double ll = 0.0, g_theta = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    const double mu = std::exp(eta[i]);
    const double y = pr.y[i];
    const double tm = theta + mu;
    const double log_ratio = -std::log1p(mu / theta);  // log(theta / (theta + mu))
    double li = log_rising(theta, y) - pr.lfact[i] + theta * log_ratio +
                y * (eta[i] - std::log(tm));
    double si = theta * (y - mu) / tm;
    double ti = digamma_diff(theta, y) + log_ratio + (mu - y) / tm;
    if (truncated) {
      const double l0 = theta * log_ratio;  // log f(0)
      const double r = 1.0 / std::expm1(-l0);  // f0 / (1 - f0)
      li -= std::log(-std::expm1(l0));
      si += r * (-theta * mu / tm);
      ti += r * (log_ratio + mu / tm);
    }
    ll += pr.w[i] * li;
    s[i] = pr.w[i] * si;
    g_theta += pr.w[i] * ti;
  }
  if (g) {
    g->resize(p + 1);
    g->head(p) = pr.X.transpose() * s;
    (*g)[p] = theta * g_theta;
  }
  return ll;
}

Eigen::MatrixXd hessian_canonical(const Problem& pr, const Eigen::VectorXd& b) {
  const Eigen::VectorXd eta = pr.X * b;
  Eigen::VectorXd curv(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    if (pr.family == Family::poisson) {
      curv[i] = pr.w[i] * std::exp(eta[i]);
    } else {
      const double p = 1.0 / (1.0 + std::exp(-eta[i]));
      curv[i] = pr.w[i] * p * (1.0 - p);
    }
  }
  return -(pr.X.transpose() * curv.asDiagonal() * pr.X);
}

Eigen::MatrixXd hessian_negbin(const Problem& pr, const Eigen::VectorXd& par) {
  const auto p = pr.X.cols();
  const double theta = std::exp(par[p]);
  const Eigen::VectorXd eta = pr.X * par.head(p);
  Eigen::VectorXd h_ee(eta.size()), h_et(eta.size());
  double h_tt = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    const double mu = std::exp(eta[i]);
    const double y = pr.y[i];
    const double tm = theta + mu;
    const double w = pr.w[i];
    h_ee[i] = -w * theta * mu * (theta + y) / (tm * tm);
    h_et[i] = w * theta * mu * (y - mu) / (tm * tm);
    const double l_t = digamma_diff(theta, y) - std::log1p(mu / theta) + (mu - y) / tm;
    const double l_tt = trigamma_diff(theta, y) + 1.0 / theta - 1.0 / tm -
                        (mu - y) / (tm * tm);
    h_tt += w * (theta * theta * l_tt + theta * l_t);
  }
  Eigen::MatrixXd h(p + 1, p + 1);
  h.topLeftCorner(p, p) = pr.X.transpose() * h_ee.asDiagonal() * pr.X;
  const Eigen::VectorXd cross = pr.X.transpose() * h_et;
  h.topRightCorner(p, 1) = cross;
  h.bottomLeftCorner(1, p) = cross.transpose();
  h(p, p) = h_tt;
  return h;
}

}  // namespace

double log_theta_lower() { return std::log(1e-8); }
double log_theta_upper() { return std::log(max_theta); }

Objective make_objective(Family family, const Eigen::MatrixXd& X,
                         const Eigen::VectorXd& y, const Eigen::VectorXd& w) {
  auto pr = std::make_shared<Problem>(Problem{family, X, y, w, log_factorials(y)});
  Objective obj;
  switch (family) {
    case Family::poisson:
    case Family::zt_poisson: {
      const bool zt = family == Family::zt_poisson;
      obj.value_and_gradient = [pr, zt](const Eigen::VectorXd& b, Eigen::VectorXd* g) {
        return eval_poisson(*pr, b, g, zt);
      };
      if (!zt) {
        obj.hessian = [pr](const Eigen::VectorXd& b) { return hessian_canonical(*pr, b); };
      }
      break;
    }
    case Family::binomial_logit:
      obj.value_and_gradient = [pr](const Eigen::VectorXd& b, Eigen::VectorXd* g) {
        return eval_logit(*pr, b, g);
      };
      obj.hessian = [pr](const Eigen::VectorXd& b) { return hessian_canonical(*pr, b); };
      break;
    case Family::negbin:
    case Family::zt_negbin: {
      const bool zt = family == Family::zt_negbin;
      obj.value_and_gradient = [pr, zt](const Eigen::VectorXd& b, Eigen::VectorXd* g) {
        return eval_negbin(*pr, b, g, zt);
      };
      if (!zt) {
        obj.hessian = [pr](const Eigen::VectorXd& b) { return hessian_negbin(*pr, b); };
      }
      break;
    }
  }
  return obj;
}

Eigen::VectorXd log_density(Family family, const Eigen::VectorXd& y,
                            const Eigen::VectorXd& mu, double theta) {
  Eigen::VectorXd out(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double lf = boost::math::lgamma(y[i] + 1.0);
    if (family == Family::poisson) {
      out[i] = y[i] * std::log(mu[i]) - mu[i] - lf;
    } else {
      const double tm = theta + mu[i];
      out[i] = log_rising(theta, y[i]) - lf - theta * std::log1p(mu[i] / theta) +
               y[i] * std::log(mu[i] / tm);
    }
    if (!std::isfinite(out[i])) out[i] = neg_inf;
  }
  return out;
}

}  // namespace countdiag::detail
