#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "countdiag/model.hpp"
#include "countdiag/predictive.hpp"
#include "countdiag/rootogram.hpp"
#include "json.hpp"

namespace countdiag {

enum class ResidualKind { quantile, pearson };

struct DiagnosticSeries {
  ResidualKind kind = ResidualKind::quantile;
  std::vector<double> values;
  std::vector<double> fitted_means;
  std::uint64_t seed = 0;  // quantile residuals only
  /// F_i(y_i - 1) and F_i(y_i); kept so the Q-Q envelope can re-randomize.
  std::vector<double> cdf_lower;
  std::vector<double> cdf_upper;
  /// P(Y_i > y_i) and P(Y_i >= y_i), summed from the pmf in the far upper
  /// tail where 1 - F rounds to 0.
  std::vector<double> survival_lower;
  std::vector<double> survival_upper;
};

/// Phi^{-1}(u_i) with u_i ~ Uniform(F_i(y_i - 1), F_i(y_i)), drawn from
/// Rng(derive_seed(seed, i)). Observations above the median are drawn on the
/// survival scale, so counts far in the upper tail stay finite.
DiagnosticSeries quantile_residuals(const std::vector<CountDistribution>& dists,
                                    std::span<const double> y, std::uint64_t seed);

struct QQCoordinates {
  std::vector<double> theoretical;  // Phi^{-1}((i - 0.5) / n)
  std::vector<double> sample;       // sorted residuals
  std::vector<double> lower;        // pointwise 5% over re-randomizations
  std::vector<double> upper;        // pointwise 95%
  int envelope_draws = 0;
  std::uint64_t seed = 0;
};

QQCoordinates qq_coordinates(const DiagnosticSeries& residuals, int envelope_draws,
                             std::uint64_t seed);

/// (y_i - m_i) / sqrt(v_i) with the model-implied mean and variance.
DiagnosticSeries pearson_residuals(const std::vector<CountDistribution>& dists,
                                   std::span<const double> y);

struct BootstrapBand {
  BreakSpec breaks;
  std::vector<double> lower;
  std::vector<double> upper;
  double lower_level = 0.025;
  double upper_level = 0.975;
  int replications = 0;
  int failed = 0;
  std::uint64_t seed = 0;
};

/// Parametric bootstrap of the hanging deviations sqrt(exp_j) - sqrt(obs_j):
/// replication b simulates from the fitted model with Rng(derive_seed(seed,
/// b)), refits, and recomputes both frequencies. Failed refits are dropped
/// and counted; more than 1% failures is an error.
BootstrapBand bootstrap_band(const Model& model, const BreakSpec& breaks, int B,
                             std::pair<double, double> levels, std::uint64_t seed);

/// Tukey's rule-of-thumb limits for the hanging deviations.
constexpr std::pair<double, double> warning_limits() { return {-1.0, 1.0}; }

/// Type-7 (linear interpolation) sample quantile.
double quantile_type7(std::vector<double> values, double p);

/// Kolmogorov-Smirnov distance between the sample and N(0, 1).
double ks_distance_normal(std::vector<double> values);

nlohmann::json to_json(const DiagnosticSeries& series);
nlohmann::json to_json(const QQCoordinates& qq);
nlohmann::json to_json(const BootstrapBand& band);

}  // namespace countdiag
