#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string_view>
#include <vector>

namespace countdiag {

/// Count families. `binomial_logit` is the 0/1 hurdle indicator whose
/// "mean" is the success probability.
enum class Family { poisson, negbin, binomial_logit, zt_poisson, zt_negbin };

std::string_view family_name(Family family);

bool has_dispersion(Family family);
bool is_zero_truncated(Family family);

/// The untruncated family underlying a zero-truncated kind (identity
/// otherwise).
Family untruncated(Family family);
Family truncated(Family family);

/// One observation's count distribution. NB uses the gamma-mixture
/// parameterization: variance mu + mu^2 / theta.
struct FamilySpec {
  Family kind = Family::poisson;
  double mean = 1.0;
  std::optional<double> theta;

  static FamilySpec poisson(double mu) { return {Family::poisson, mu, {}}; }
  static FamilySpec negbin(double mu, double theta) {
    return {Family::negbin, mu, theta};
  }
  static FamilySpec binomial_logit(double p) {
    return {Family::binomial_logit, p, {}};
  }
  static FamilySpec zt_poisson(double mu) {
    return {Family::zt_poisson, mu, {}};
  }
  static FamilySpec zt_negbin(double mu, double theta) {
    return {Family::zt_negbin, mu, theta};
  }

  /// Throws DomainError when the parameters are outside the family's range.
  void validate() const;
};

/// Largest theta treated as a genuine NB; beyond it the fitters pin theta
/// here and the family is effectively Poisson.
inline constexpr double max_theta = 1e8;

using Rng = std::mt19937_64;

/// Deterministic child seed for replication / restart `index`.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

/// log f(j) of the untruncated family (kind's zero-truncation ignored).
/// Returns -inf outside the support.
double untruncated_log_pmf(const FamilySpec& family, long j);

/// log P(Y = 0) of the untruncated family.
double log_zero_prob(const FamilySpec& family);

/// f(j). Zero-truncated kinds return the truncated mass (0 at j = 0).
double count_pmf(const FamilySpec& family, long j);

/// F(j) = sum_{k <= j} f(k); 0 for j < 0.
double count_cdf(const FamilySpec& family, long j);

/// F(0), ..., F(jmax) in one forward pass.
std::vector<double> cdf_table(const FamilySpec& family, long jmax);

/// Zero-truncated mass f(j) / (1 - f(0)); j = 0 is a domain error.
double zt_pmf(const FamilySpec& family, long j);

double family_mean(const FamilySpec& family);
double family_variance(const FamilySpec& family);

std::int64_t count_sample(const FamilySpec& family, Rng& rng);

}  // namespace countdiag
