#include "countdiag/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "countdiag/error.hpp"

namespace countdiag {

namespace {

std::vector<double> to_std(const Eigen::VectorXd& v) {
  return {v.data(), v.data() + v.size()};
}

struct Bounds {
  Eigen::VectorXd lower, upper;

  double clamp(Eigen::Index k, double v) const {
    return std::clamp(v, lower[k], upper[k]);
  }
};

Bounds make_bounds(const OptimizeOptions& opt, Eigen::Index p) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  Bounds b{Eigen::VectorXd::Constant(p, -inf), Eigen::VectorXd::Constant(p, inf)};
  if (opt.lower.size() == p) b.lower = opt.lower;
  if (opt.upper.size() == p) b.upper = opt.upper;
  return b;
}

// Free coordinates: not pinned to a bound by an outward score.
std::vector<bool> free_mask(const Eigen::VectorXd& x, const Eigen::VectorXd& g,
                            const Bounds& b) {
  std::vector<bool> free(static_cast<std::size_t>(x.size()), true);
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    if ((x[k] >= b.upper[k] && g[k] > 0) || (x[k] <= b.lower[k] && g[k] < 0)) {
      free[static_cast<std::size_t>(k)] = false;
    }
  }
  return free;
}

double free_norm(const Eigen::VectorXd& g, const std::vector<bool>& free) {
  double m = 0.0;
  for (Eigen::Index k = 0; k < g.size(); ++k) {
    if (free[static_cast<std::size_t>(k)]) m = std::max(m, std::abs(g[k]));
  }
  return m;
}

// Solves (-H + lambda I) d = g on the free block, raising lambda until the
// system is positive definite.
Eigen::VectorXd newton_direction(const Eigen::MatrixXd& hessian,
                                 const Eigen::VectorXd& g,
                                 const std::vector<bool>& free) {
  std::vector<Eigen::Index> idx;
  for (Eigen::Index k = 0; k < g.size(); ++k) {
    if (free[static_cast<std::size_t>(k)]) idx.push_back(k);
  }
  const auto m = static_cast<Eigen::Index>(idx.size());
  Eigen::MatrixXd a(m, m);
  Eigen::VectorXd rhs(m);
  for (Eigen::Index r = 0; r < m; ++r) {
    rhs[r] = g[idx[r]];
    for (Eigen::Index c = 0; c < m; ++c) a(r, c) = -hessian(idx[r], idx[c]);
  }
  double scale = 0.0;
  for (Eigen::Index r = 0; r < m; ++r) scale = std::max(scale, std::abs(a(r, r)));
  if (scale == 0.0) scale = 1.0;

  Eigen::VectorXd d_free;
  double lambda = 0.0;
  for (int attempt = 0; attempt < 60; ++attempt) {
    Eigen::MatrixXd reg = a;
    reg.diagonal().array() += lambda;
    Eigen::LLT<Eigen::MatrixXd> llt(reg);
    if (llt.info() == Eigen::Success) {
      d_free = llt.solve(rhs);
      if (d_free.allFinite()) break;
    }
    lambda = lambda == 0.0 ? 1e-8 * scale : lambda * 10.0;
  }
  if (d_free.size() != m) d_free = rhs / scale;

  Eigen::VectorXd d = Eigen::VectorXd::Zero(g.size());
  for (Eigen::Index r = 0; r < m; ++r) d[idx[r]] = d_free[r];
  return d;
}

}  // namespace

Eigen::MatrixXd numerical_hessian(const Objective& objective,
                                  const Eigen::VectorXd& x) {
  const auto p = x.size();
  Eigen::MatrixXd h(p, p);
  Eigen::VectorXd gp(p), gm(p);
  for (Eigen::Index k = 0; k < p; ++k) {
    const double step = 1e-5 * (1.0 + std::abs(x[k]));
    Eigen::VectorXd xp = x, xm = x;
    xp[k] += step;
    xm[k] -= step;
    objective.value_and_gradient(xp, &gp);
    objective.value_and_gradient(xm, &gm);
    h.col(k) = (gp - gm) / (2.0 * step);
  }
  return 0.5 * (h + h.transpose());
}

Eigen::MatrixXd invert_information(const Eigen::MatrixXd& hessian) {
  const Eigen::MatrixXd info = -0.5 * (hessian + hessian.transpose());
  Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
      (ldlt.vectorD().array() <= 0.0).any()) {
    throw FitError("observed information is singular or indefinite");
  }
  Eigen::MatrixXd cov =
      ldlt.solve(Eigen::MatrixXd::Identity(info.rows(), info.cols()));
  if (!cov.allFinite()) throw FitError("observed information is singular");
  return 0.5 * (cov + cov.transpose());
}

OptimizeResult maximize(const Objective& objective, Eigen::VectorXd x,
                        const OptimizeOptions& options) {
  const auto p = x.size();
  const Bounds bounds = make_bounds(options, p);
  for (Eigen::Index k = 0; k < p; ++k) x[k] = bounds.clamp(k, x[k]);

  Eigen::VectorXd g(p);
  double f = objective.value_and_gradient(x, &g);
  if (!std::isfinite(f) || !g.allFinite()) {
    throw FitError("log-likelihood is not finite at the starting values");
  }

  double rel_change = std::numeric_limits<double>::infinity();
  auto free = free_mask(x, g, bounds);
  double gnorm = free_norm(g, free);

  for (int iter = 0; iter <= options.max_iterations; ++iter) {
    if (gnorm < options.gradient_tolerance &&
        rel_change < options.relative_tolerance) {
      return {x, f, g, gnorm, iter, [&] {
                std::vector<bool> pinned(free.size());
                for (std::size_t k = 0; k < free.size(); ++k) pinned[k] = !free[k];
                return pinned;
              }()};
    }
    if (iter == options.max_iterations) break;

    const Eigen::MatrixXd hess =
        objective.hessian ? objective.hessian(x) : numerical_hessian(objective, x);
    Eigen::VectorXd d = newton_direction(hess, g, free);

    double slope = g.dot(d);
    if (!(slope > 0.0)) {  // not an ascent direction: fall back to the score
      d = Eigen::VectorXd::Zero(p);
      for (Eigen::Index k = 0; k < p; ++k) {
        if (free[static_cast<std::size_t>(k)]) d[k] = g[k];
      }
      slope = g.dot(d);
    }

    double t = 1.0;
    Eigen::VectorXd x_new(p), g_new(p);
    double f_new = f;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      for (Eigen::Index k = 0; k < p; ++k) x_new[k] = bounds.clamp(k, x[k] + t * d[k]);
      f_new = objective.value_and_gradient(x_new, &g_new);
      if (std::isfinite(f_new) && g_new.allFinite() &&
          f_new >= f + 1e-4 * t * slope) {
        accepted = true;
        break;
      }
      // Within round-off of the optimum the value cannot resolve the gain;
      // accept the step when it shrinks the score instead.
      if (std::isfinite(f_new) && g_new.allFinite() &&
          std::abs(f_new - f) <= 1e-12 * std::max(1.0, std::abs(f)) &&
          free_norm(g_new, free) < gnorm) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      if (gnorm < options.gradient_tolerance) {
        rel_change = 0.0;  // stationary to working precision
        continue;
      }
      throw ConvergenceError("line search failed", to_std(x), gnorm, iter);
    }

    rel_change = std::abs(f_new - f) / std::max(1.0, std::abs(f));
    x = x_new;
    f = f_new;
    g = g_new;
    free = free_mask(x, g, bounds);
    gnorm = free_norm(g, free);
  }
  throw ConvergenceError("iteration limit reached", to_std(x), gnorm,
                         options.max_iterations);
}

}  // namespace countdiag
