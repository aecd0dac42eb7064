#include "countdiag/dist.hpp"

#include <boost/math/special_functions/gamma.hpp>
#include <boost/random/gamma_distribution.hpp>
#include <boost/random/poisson_distribution.hpp>
#include <boost/random/uniform_01.hpp>
#include <cmath>
#include <limits>
#include <string>

#include "countdiag/error.hpp"

namespace countdiag {

namespace {

constexpr double neg_inf = -std::numeric_limits<double>::infinity();

// Relative size below which the remaining tail is ignored by forward sums.
constexpr double tail_epsilon = 1e-17;

std::string describe(const FamilySpec& f) {
  std::string s(family_name(f.kind));
  s += "(mu=" + std::to_string(f.mean);
  if (f.theta) s += ", theta=" + std::to_string(*f.theta);
  return s + ")";
}

// log Gamma(j + theta) - log Gamma(theta). Summation keeps precision when
// theta is huge relative to j.
double log_rising(double theta, long j) {
  if (j <= 64) {
    double s = 0.0;
    for (long k = 0; k < j; ++k) s += std::log(theta + static_cast<double>(k));
    return s;
  }
  return boost::math::lgamma(theta + static_cast<double>(j)) -
         boost::math::lgamma(theta);
}

double log_factorial(long j) {
  return boost::math::lgamma(static_cast<double>(j) + 1.0);
}

// log of the ratio f(k+1) / f(k) for the untruncated family.
double log_step(const FamilySpec& f, long k) {
  const double kk = static_cast<double>(k);
  if (untruncated(f.kind) == Family::poisson) {
    return std::log(f.mean) - std::log(kk + 1.0);
  }
  const double theta = *f.theta;
  return std::log(kk + theta) - std::log(kk + 1.0) +
         std::log(f.mean / (theta + f.mean));
}

// Mass at zero of the untruncated family, complement computed directly so
// small means do not cancel.
double positive_mass(const FamilySpec& f) {
  return -std::expm1(log_zero_prob(f));
}

}  // namespace

std::string_view family_name(Family family) {
  switch (family) {
    case Family::poisson: return "poisson";
    case Family::negbin: return "negbin";
    case Family::binomial_logit: return "binomial_logit";
    case Family::zt_poisson: return "zt_poisson";
    case Family::zt_negbin: return "zt_negbin";
  }
  return "unknown";
}

bool has_dispersion(Family family) {
  return family == Family::negbin || family == Family::zt_negbin;
}

bool is_zero_truncated(Family family) {
  return family == Family::zt_poisson || family == Family::zt_negbin;
}

Family untruncated(Family family) {
  switch (family) {
    case Family::zt_poisson: return Family::poisson;
    case Family::zt_negbin: return Family::negbin;
    default: return family;
  }
}

Family truncated(Family family) {
  switch (family) {
    case Family::poisson: return Family::zt_poisson;
    case Family::negbin: return Family::zt_negbin;
    case Family::zt_poisson:
    case Family::zt_negbin: return family;
    case Family::binomial_logit: break;
  }
  throw DomainError("binomial_logit has no zero-truncated counterpart");
}

void FamilySpec::validate() const {
  if (kind == Family::binomial_logit) {
    if (!(mean > 0.0 && mean < 1.0)) {
      throw DomainError("binomial_logit probability must lie in (0, 1): " +
                        describe(*this));
    }
  } else if (!(mean > 0.0) || !std::isfinite(mean)) {
    throw DomainError("mean must be positive and finite: " + describe(*this));
  }
  if (has_dispersion(kind)) {
    if (!theta || !(*theta > 0.0) || !std::isfinite(*theta)) {
      throw DomainError("theta must be positive and finite: " +
                        describe(*this));
    }
  } else if (theta) {
    throw DomainError("theta given for a family without dispersion: " +
                      describe(*this));
  }
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  // splitmix64 finalizer applied to a mix of both inputs
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(master) ^ (index * 0xd1b54a32d192ed03ULL + 1));
}

double log_zero_prob(const FamilySpec& f) {
  switch (untruncated(f.kind)) {
    case Family::poisson: return -f.mean;
    case Family::negbin: return -*f.theta * std::log1p(f.mean / *f.theta);
    case Family::binomial_logit: return std::log1p(-f.mean);
    default: break;
  }
  return neg_inf;
}

double untruncated_log_pmf(const FamilySpec& f, long j) {
  if (j < 0) return neg_inf;
  const double jj = static_cast<double>(j);
  switch (untruncated(f.kind)) {
    case Family::poisson:
      return jj * std::log(f.mean) - f.mean - log_factorial(j);
    case Family::negbin: {
      const double theta = *f.theta;
      return log_rising(theta, j) - log_factorial(j) -
             theta * std::log1p(f.mean / theta) +
             jj * std::log(f.mean / (theta + f.mean));
    }
    case Family::binomial_logit:
      if (j == 0) return std::log1p(-f.mean);
      if (j == 1) return std::log(f.mean);
      return neg_inf;
    default: break;
  }
  return neg_inf;
}

double count_pmf(const FamilySpec& family, long j) {
  family.validate();
  if (is_zero_truncated(family.kind)) {
    if (j < 1) return 0.0;
    return std::exp(untruncated_log_pmf(family, j)) / positive_mass(family);
  }
  return std::exp(untruncated_log_pmf(family, j));
}

double zt_pmf(const FamilySpec& family, long j) {
  family.validate();
  if (j < 1) {
    throw DomainError("zero-truncated pmf is undefined at j = " +
                      std::to_string(j));
  }
  if (family.kind == Family::binomial_logit) {
    throw DomainError("binomial_logit has no zero-truncated counterpart");
  }
  return std::exp(untruncated_log_pmf(family, j)) / positive_mass(family);
}

std::vector<double> cdf_table(const FamilySpec& family, long jmax) {
  family.validate();
  if (jmax < 0) return {};
  std::vector<double> out(static_cast<std::size_t>(jmax) + 1, 1.0);

  if (family.kind == Family::binomial_logit) {
    out[0] = 1.0 - family.mean;
    return out;
  }

  const bool zt = is_zero_truncated(family.kind);
  const double norm = zt ? positive_mass(family) : 1.0;
  const double mean = family.mean;

  double log_term = log_zero_prob(family);
  double total = zt ? 0.0 : std::exp(log_term);
  out[0] = total / norm;
  for (long k = 1; k <= jmax; ++k) {
    log_term += log_step(family, k - 1);
    const double term = std::exp(log_term);
    total += term;
    out[static_cast<std::size_t>(k)] = std::min(1.0, total / norm);
    // Past the mean, once terms stop contributing the rest stays at 1.
    if (static_cast<double>(k) > mean && term < tail_epsilon * total) {
      const double last = out[static_cast<std::size_t>(k)];
      for (long r = k + 1; r <= jmax; ++r) out[static_cast<std::size_t>(r)] = last;
      break;
    }
  }
  return out;
}

double count_cdf(const FamilySpec& family, long j) {
  family.validate();
  if (j < 0) return 0.0;
  return cdf_table(family, j).back();
}

double family_mean(const FamilySpec& f) {
  f.validate();
  if (is_zero_truncated(f.kind)) return f.mean / positive_mass(f);
  return f.mean;
}

double family_variance(const FamilySpec& f) {
  f.validate();
  if (f.kind == Family::binomial_logit) return f.mean * (1.0 - f.mean);
  const double base_var =
      has_dispersion(f.kind) ? f.mean + f.mean * f.mean / *f.theta : f.mean;
  if (!is_zero_truncated(f.kind)) return base_var;
  const double p = positive_mass(f);
  const double m1 = f.mean / p;
  const double m2 = (base_var + f.mean * f.mean) / p;
  return m2 - m1 * m1;
}

namespace {

std::int64_t draw_poisson(double lambda, Rng& rng) {
  if (!(lambda > 0.0)) return 0;
  boost::random::poisson_distribution<std::int64_t, double> dist(lambda);
  return dist(rng);
}

std::int64_t draw_untruncated(const FamilySpec& f, Rng& rng) {
  switch (untruncated(f.kind)) {
    case Family::poisson:
      return draw_poisson(f.mean, rng);
    case Family::negbin: {
      const double theta = *f.theta;
      boost::random::gamma_distribution<double> gamma(theta, f.mean / theta);
      return draw_poisson(gamma(rng), rng);
    }
    case Family::binomial_logit: {
      boost::random::uniform_01<double> u;
      return u(rng) < f.mean ? 1 : 0;
    }
    default: break;
  }
  return 0;
}

}  // namespace

std::int64_t count_sample(const FamilySpec& family, Rng& rng) {
  family.validate();
  if (!is_zero_truncated(family.kind)) return draw_untruncated(family, rng);

  // Rejection from the untruncated family; exact, and cheap unless the
  // zero mass is overwhelming, where inversion takes over.
  if (positive_mass(family) > 0.05) {
    for (;;) {
      const auto y = draw_untruncated(family, rng);
      if (y > 0) return y;
    }
  }
  boost::random::uniform_01<double> unif;
  const double u = unif(rng);
  const double norm = positive_mass(family);
  double log_term = log_zero_prob(family);
  double total = 0.0;
  for (long k = 1;; ++k) {
    log_term += log_step(family, k - 1);
    total += std::exp(log_term) / norm;
    if (u <= total || k > 100000) return k;
  }
}

}  // namespace countdiag
