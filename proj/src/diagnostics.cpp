#include "countdiag/diagnostics.hpp"

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "countdiag/error.hpp"

namespace countdiag {

namespace {

const boost::math::normal standard_normal;

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double std_normal_quantile(double p) { return boost::math::quantile(standard_normal, p); }

// Uniform fraction strictly inside (0, 1).
double unit_draw(Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (;;) {
    const double t = unif(rng);
    if (t > 0.0) return t;
  }
}

// P(Y >= y). Plain 1 - F(y - 1) unless that has lost its precision, then a
// pmf sum over the (decreasing) far tail.
double survival_from(const CountDistribution& d, long y, double cdf_below) {
  if (y <= 0) return 1.0;
  if (1.0 - cdf_below > 1e-3) return 1.0 - cdf_below;
  double s = 0.0, prev = std::numeric_limits<double>::infinity();
  for (long j = y; j < y + 1000000; ++j) {
    const double p = d.pmf(j);
    s += p;
    if (p <= 1e-18 * s && p <= prev) break;
    prev = p;
  }
  return s;
}

// One randomized residual for the interval stored at position i.
double draw_residual(const DiagnosticSeries& s, std::size_t i, Rng& rng) {
  const double t = unit_draw(rng);
  if (s.cdf_lower[i] <= 0.5) {
    const double lo = s.cdf_lower[i], hi = s.cdf_upper[i];
    return std_normal_quantile(std::min(lo + (hi - lo) * t, std::nextafter(1.0, 0.0)));
  }
  const double lo = s.survival_lower[i], hi = s.survival_upper[i];
  return -std_normal_quantile(std::max(hi - (hi - lo) * t, std::numeric_limits<double>::min()));
}

}  // namespace

DiagnosticSeries quantile_residuals(const std::vector<CountDistribution>& dists,
                                    std::span<const double> y, std::uint64_t seed) {
  if (dists.size() != y.size()) throw DataError("residuals: model and data sizes differ");
  DiagnosticSeries s;
  s.kind = ResidualKind::quantile;
  s.seed = seed;
  const std::size_t n = y.size();
  s.values.resize(n);
  s.fitted_means.resize(n);
  s.cdf_lower.resize(n);
  s.cdf_upper.resize(n);
  s.survival_lower.resize(n);
  s.survival_upper.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const long yi = static_cast<long>(y[i]);
    const auto table = dists[i].cdf_table(yi);
    const double hi = std::min(1.0, table.back());
    const double lo = yi > 0 ? table[static_cast<std::size_t>(yi) - 1] : 0.0;
    s.cdf_lower[i] = lo;
    s.cdf_upper[i] = hi;
    bool empty = !(hi > lo);
    if (lo > 0.5) {
      const double at_least = survival_from(dists[i], yi, lo);
      const double above = at_least - dists[i].pmf(yi);
      s.survival_upper[i] = at_least;
      s.survival_lower[i] = std::max(0.0, above);
      empty = !(at_least > s.survival_lower[i]);
    } else {
      s.survival_upper[i] = 1.0 - lo;
      s.survival_lower[i] = 1.0 - hi;
    }
    if (empty) {
      throw FitError("quantile residual for observation " + std::to_string(i + 1) +
                     " (y = " + std::to_string(yi) + "): the count has zero probability");
    }
    Rng rng(derive_seed(seed, i));
    s.values[i] = draw_residual(s, i, rng);
    s.fitted_means[i] = dists[i].mean();
  }
  return s;
}

QQCoordinates qq_coordinates(const DiagnosticSeries& residuals, int envelope_draws,
                             std::uint64_t seed) {
  const std::size_t n = residuals.values.size();
  if (n < 2) throw DataError("Q-Q plot needs at least 2 observations, got " + std::to_string(n));
  if (envelope_draws < 1) throw ConfigError("envelope draws must be at least 1");
  if (residuals.kind != ResidualKind::quantile || residuals.cdf_lower.size() != n ||
      residuals.survival_lower.size() != n) {
    throw ConfigError("Q-Q coordinates need randomized quantile residuals");
  }
  QQCoordinates qq;
  qq.envelope_draws = envelope_draws;
  qq.seed = seed;
  qq.sample = residuals.values;
  std::sort(qq.sample.begin(), qq.sample.end());
  for (std::size_t i = 0; i < n; ++i) {
    qq.theoretical.push_back(std_normal_quantile((static_cast<double>(i) + 0.5) / n));
  }

  // draws[i][d]: i-th order statistic of re-randomization d
  std::vector<std::vector<double>> draws(n, std::vector<double>(static_cast<std::size_t>(envelope_draws)));
  std::vector<double> r(n);
  for (int d = 0; d < envelope_draws; ++d) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(d)));
    for (std::size_t i = 0; i < n; ++i) {
      r[i] = draw_residual(residuals, i, rng);
    }
    std::sort(r.begin(), r.end());
    for (std::size_t i = 0; i < n; ++i) draws[i][static_cast<std::size_t>(d)] = r[i];
  }
  for (std::size_t i = 0; i < n; ++i) {
    qq.lower.push_back(quantile_type7(draws[i], 0.05));
    qq.upper.push_back(quantile_type7(std::move(draws[i]), 0.95));
  }
  return qq;
}

DiagnosticSeries pearson_residuals(const std::vector<CountDistribution>& dists,
                                   std::span<const double> y) {
  if (dists.size() != y.size()) throw DataError("residuals: model and data sizes differ");
  DiagnosticSeries s;
  s.kind = ResidualKind::pearson;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double m = dists[i].mean();
    const double v = dists[i].variance();
    if (!(v > 0.0)) {
      throw FitError("Pearson residual for observation " + std::to_string(i + 1) +
                     ": model variance is not positive");
    }
    s.values.push_back((y[i] - m) / std::sqrt(v));
    s.fitted_means.push_back(m);
  }
  return s;
}

BootstrapBand bootstrap_band(const Model& model, const BreakSpec& breaks, int B,
                             std::pair<double, double> levels, std::uint64_t seed) {
  if (B < 1) throw ConfigError("bootstrap needs B >= 1");
  const auto [lo_level, hi_level] = levels;
  if (!(lo_level >= 0.0 && lo_level <= hi_level && hi_level <= 1.0)) {
    throw ConfigError("bootstrap levels must satisfy 0 <= lower <= upper <= 1");
  }
  breaks.validate();
  const auto dists = model.distributions();
  const Eigen::VectorXd& w = model.weights();
  const std::span<const double> wspan(w.data(), static_cast<std::size_t>(w.size()));
  const std::size_t m = breaks.bins();
  const auto n = static_cast<Eigen::Index>(dists.size());

  std::vector<std::vector<double>> dev(m);
  int failed = 0;
  Eigen::VectorXd ystar(n);
  for (int b = 0; b < B; ++b) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(b)));
    for (Eigen::Index i = 0; i < n; ++i) {
      ystar[i] = static_cast<double>(dists[static_cast<std::size_t>(i)].sample(rng));
    }
    try {
      const Model refit = model.refit(ystar);
      const auto obs = observed_frequencies(
          std::span<const double>(ystar.data(), static_cast<std::size_t>(n)), wspan, breaks);
      const auto exp = expected_frequencies(refit.distributions(), wspan, breaks);
      for (std::size_t j = 0; j < m; ++j) {
        dev[j].push_back(std::sqrt(exp[j]) - std::sqrt(obs.obs[j]));
      }
    } catch (const Error&) {
      ++failed;
    }
  }
  if (failed > 0.01 * B) {
    throw FitError(std::to_string(failed) + " of " + std::to_string(B) +
                   " bootstrap refits failed (more than 1%)");
  }
  BootstrapBand band;
  band.breaks = breaks;
  band.lower_level = lo_level;
  band.upper_level = hi_level;
  band.replications = B;
  band.failed = failed;
  band.seed = seed;
  for (std::size_t j = 0; j < m; ++j) {
    band.lower.push_back(quantile_type7(dev[j], lo_level));
    band.upper.push_back(quantile_type7(std::move(dev[j]), hi_level));
  }
  return band;
}

double quantile_type7(std::vector<double> values, double p) {
  if (values.empty()) throw DomainError("quantile of an empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("quantile level outside [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

double ks_distance_normal(std::vector<double> values) {
  if (values.empty()) throw DomainError("KS distance of an empty sample");
  std::sort(values.begin(), values.end());
  const auto n = static_cast<double>(values.size());
  double d = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double f = std_normal_cdf(values[i]);
    d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  return d;
}

nlohmann::json to_json(const DiagnosticSeries& s) {
  nlohmann::json j = {
      {"schema", "residuals/v1"},
      {"kind", s.kind == ResidualKind::quantile ? "quantile" : "pearson"},
      {"values", s.values},
      {"fitted_means", s.fitted_means},
  };
  if (s.kind == ResidualKind::quantile) j["seed"] = s.seed;
  return j;
}

nlohmann::json to_json(const QQCoordinates& qq) {
  return {
      {"schema", "qq/v1"},
      {"theoretical", qq.theoretical},
      {"sample", qq.sample},
      {"envelope_lower", qq.lower},
      {"envelope_upper", qq.upper},
      {"envelope_levels", {0.05, 0.95}},
      {"envelope_draws", qq.envelope_draws},
      {"seed", qq.seed},
  };
}

nlohmann::json to_json(const BootstrapBand& band) {
  const auto [wl, wu] = warning_limits();
  return {
      {"schema", "bootstrap-band/v1"},
      {"breaks", band.breaks.breaks},
      {"lower", band.lower},
      {"upper", band.upper},
      {"levels", {band.lower_level, band.upper_level}},
      {"replications", band.replications},
      {"failed", band.failed},
      {"seed", band.seed},
      {"warning_limits", {wl, wu}},
  };
}

}  // namespace countdiag
