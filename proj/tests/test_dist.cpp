#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <vector>

#include "countdiag/dist.hpp"
#include "countdiag/error.hpp"
#include "countdiag/predictive.hpp"

using namespace countdiag;

namespace {

// Independent pmf straight from the textbook formulas.
double oracle_pmf(const FamilySpec& f, long j) {
  const double y = static_cast<double>(j);
  if (f.kind == Family::poisson) {
    return std::exp(y * std::log(f.mean) - f.mean - std::lgamma(y + 1.0));
  }
  const double th = *f.theta, mu = f.mean;
  return std::exp(std::lgamma(y + th) - std::lgamma(th) - std::lgamma(y + 1.0) +
                  th * std::log(th / (th + mu)) + y * std::log(mu / (th + mu)));
}

std::vector<FamilySpec> grid() {
  std::vector<FamilySpec> out;
  for (double mu : {0.1, 1.0, 3.0, 10.0}) {
    out.push_back(FamilySpec::poisson(mu));
    out.push_back(FamilySpec::zt_poisson(mu));
    for (double th : {0.5, 2.0, 100.0}) {
      out.push_back(FamilySpec::negbin(mu, th));
      out.push_back(FamilySpec::zt_negbin(mu, th));
    }
  }
  return out;
}

}  // namespace

TEST(Pmf, ClosedForms) {
  EXPECT_NEAR(count_pmf(FamilySpec::poisson(3.0), 0), std::exp(-3.0), 1e-15);
  EXPECT_NEAR(count_pmf(FamilySpec::negbin(3.0, 2.0), 0), 0.16, 1e-15);
  EXPECT_NEAR(zt_pmf(FamilySpec::zt_poisson(1.0), 1), 0.581977, 1e-6);
  EXPECT_NEAR(count_pmf(FamilySpec::binomial_logit(0.3), 1), 0.3, 1e-15);
  EXPECT_NEAR(count_pmf(FamilySpec::binomial_logit(0.3), 0), 0.7, 1e-15);
}

TEST(Pmf, MatchesTextbookFormula) {
  for (double mu : {0.1, 1.0, 3.0, 10.0}) {
    for (long j = 0; j <= 40; ++j) {
      EXPECT_NEAR(count_pmf(FamilySpec::poisson(mu), j),
                  oracle_pmf(FamilySpec::poisson(mu), j), 1e-13);
      for (double th : {0.5, 2.0, 100.0}) {
        EXPECT_NEAR(count_pmf(FamilySpec::negbin(mu, th), j),
                    oracle_pmf(FamilySpec::negbin(mu, th), j), 1e-13);
      }
    }
  }
}

TEST(Pmf, LargeThetaIsPoisson) {
  for (long j = 0; j <= 20; ++j) {
    EXPECT_NEAR(count_pmf(FamilySpec::negbin(3.0, 1e8), j), count_pmf(FamilySpec::poisson(3.0), j),
                1e-6);
  }
}

TEST(Pmf, SumsToOne) {
  for (const auto& f : grid()) {
    double s = 0.0;
    for (long j = 0; j <= 2000; ++j) s += count_pmf(f, j);
    EXPECT_NEAR(s, 1.0, 1e-9) << family_name(f.kind) << " mu=" << f.mean;
  }
  double zt = 0.0;
  for (long j = 1; j <= 500; ++j) zt += zt_pmf(FamilySpec::zt_negbin(3.0, 2.0), j);
  EXPECT_NEAR(zt, 1.0, 1e-9);
}

TEST(Pmf, InvalidParameters) {
  EXPECT_THROW(count_pmf(FamilySpec::poisson(0.0), 0), DomainError);
  EXPECT_THROW(count_pmf(FamilySpec::poisson(-1.0), 0), DomainError);
  EXPECT_THROW(count_pmf(FamilySpec::negbin(1.0, 0.0), 0), DomainError);
  EXPECT_THROW(count_pmf(FamilySpec::binomial_logit(1.0), 0), DomainError);
  EXPECT_THROW(count_pmf(FamilySpec{Family::poisson, 1.0, 2.0}, 0), DomainError);
  EXPECT_THROW(count_pmf(FamilySpec{Family::negbin, 1.0, {}}, 0), DomainError);
  EXPECT_THROW(zt_pmf(FamilySpec::zt_poisson(2.0), 0), DomainError);
}

TEST(Cdf, BelowSupportAndAtZero) {
  EXPECT_EQ(count_cdf(FamilySpec::poisson(3.0), -1), 0.0);
  EXPECT_NEAR(count_cdf(FamilySpec::poisson(3.0), 0), std::exp(-3.0), 1e-15);
}

TEST(Cdf, MatchesPartialSums) {
  double s = 0.0;
  const auto nb = FamilySpec::negbin(3.0, 2.0);
  for (long j = 0; j <= 10; ++j) s += oracle_pmf(nb, j);
  EXPECT_NEAR(count_cdf(nb, 10), s, 1e-12);
}

TEST(Cdf, GridInvariants) {
  for (const auto& f : grid()) {
    const auto table = cdf_table(f, 60);
    double prev = 0.0;
    for (long j = 0; j <= 60; ++j) {
      const double pmf = count_pmf(f, j);
      EXPECT_GE(pmf, 0.0);
      EXPECT_GE(table[static_cast<std::size_t>(j)], prev);
      EXPECT_NEAR(table[static_cast<std::size_t>(j)] - prev, pmf, 1e-12);
      EXPECT_NEAR(count_cdf(f, j), table[static_cast<std::size_t>(j)], 1e-14);
      prev = table[static_cast<std::size_t>(j)];
    }
  }
}

TEST(Moments, AnalyticMeanOfNegbin) {
  for (double mu : {0.1, 1.0, 3.0, 10.0}) {
    for (double th : {0.5, 2.0, 100.0}) {
      const auto f = FamilySpec::negbin(mu, th);
      double m = 0.0, tail = 1.0;
      long j = 0;
      for (; tail > 1e-12 || j < 10; ++j) {
        const double p = count_pmf(f, j);
        m += j * p;
        tail -= p;
      }
      EXPECT_NEAR(m, mu, 1e-8) << "mu=" << mu << " theta=" << th;
      EXPECT_NEAR(family_variance(f), mu + mu * mu / th, 1e-12);
    }
  }
  const auto zt = FamilySpec::zt_poisson(2.0);
  EXPECT_NEAR(family_mean(zt), 2.0 / (1.0 - std::exp(-2.0)), 1e-12);
}

TEST(Sampling, PoissonMean) {
  Rng rng(1);
  double s = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) s += static_cast<double>(count_sample(FamilySpec::poisson(3.0), rng));
  EXPECT_NEAR(s / n, 3.0, 0.05);
}

TEST(Sampling, NegbinVariance) {
  Rng rng(2);
  const int n = 100000;
  std::vector<double> x(n);
  double m = 0.0;
  for (auto& v : x) {
    v = static_cast<double>(count_sample(FamilySpec::negbin(3.0, 2.0), rng));
    m += v;
  }
  m /= n;
  double var = 0.0;
  for (double v : x) var += (v - m) * (v - m);
  EXPECT_NEAR(var / (n - 1), 7.5, 0.3);
}

TEST(Sampling, SeededStreamsAgree) {
  Rng a(42), b(42);
  const auto f = FamilySpec::negbin(3.0, 2.0);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(count_sample(f, a), count_sample(f, b));
}

TEST(Sampling, EmpiricalPmf) {
  const int n = 1000000;
  for (const auto& f : {FamilySpec::poisson(3.0), FamilySpec::negbin(3.0, 2.0),
                        FamilySpec::zt_poisson(1.0), FamilySpec::zt_negbin(10.0, 0.5)}) {
    Rng rng(derive_seed(11, static_cast<std::uint64_t>(f.kind)));
    std::map<std::int64_t, double> freq;
    for (int i = 0; i < n; ++i) freq[count_sample(f, rng)] += 1.0 / n;
    double worst = 0.0;
    for (long j = 0; j <= 60; ++j) {
      worst = std::max(worst, std::abs(freq[j] - count_pmf(f, j)));
    }
    EXPECT_LT(worst, 0.005) << family_name(f.kind);
    if (is_zero_truncated(f.kind)) EXPECT_EQ(freq[0], 0.0);
  }
}

TEST(Sampling, ZeroTruncatedWithTinyPositiveMass) {
  Rng rng(5);
  const auto f = FamilySpec::zt_poisson(0.01);
  for (int i = 0; i < 1000; ++i) EXPECT_GE(count_sample(f, rng), 1);
}

TEST(Seeds, DeriveSeedIsDeterministicAndSpreads) {
  EXPECT_EQ(derive_seed(7, 3), derive_seed(7, 3));
  EXPECT_NE(derive_seed(7, 3), derive_seed(7, 4));
  EXPECT_NE(derive_seed(7, 3), derive_seed(8, 3));
}

TEST(CountDistribution, HurdleComposite) {
  const HurdleSpec h{0.3, FamilySpec::zt_negbin(2.0, 1.5)};
  const CountDistribution d(h);
  EXPECT_NEAR(d.pmf(0), 0.3, 1e-15);
  double s = 0.0, m = 0.0, m2 = 0.0;
  for (long j = 0; j <= 2000; ++j) {
    const double p = d.pmf(j);
    s += p;
    m += j * p;
    m2 += static_cast<double>(j) * j * p;
  }
  EXPECT_NEAR(s, 1.0, 1e-8);
  EXPECT_NEAR(d.mean(), m, 1e-8);
  EXPECT_NEAR(d.variance(), m2 - m * m, 1e-8);
  const auto table = d.cdf_table(5);
  EXPECT_NEAR(table[0], 0.3, 1e-15);
  EXPECT_NEAR(table[5] - table[4], d.pmf(5), 1e-14);
}

TEST(CountDistribution, HurdleWithoutZerosIsTruncatedFamily) {
  const auto zt = FamilySpec::zt_poisson(1.7);
  const CountDistribution d(HurdleSpec{0.0, zt});
  EXPECT_NEAR(d.mean(), family_mean(zt), 1e-14);
}

TEST(CountDistribution, MixtureMoments) {
  MixtureSpec m{{{0.4, FamilySpec::negbin(1.0, 2.0)}, {0.6, FamilySpec::negbin(8.0, 5.0)}}};
  const CountDistribution d(m);
  double mean = 0.0, m2 = 0.0, s = 0.0;
  for (long j = 0; j <= 3000; ++j) {
    const double p = d.pmf(j);
    s += p;
    mean += j * p;
    m2 += static_cast<double>(j) * j * p;
  }
  EXPECT_NEAR(s, 1.0, 1e-10);
  EXPECT_NEAR(d.mean(), mean, 1e-8);
  EXPECT_NEAR(d.variance(), m2 - mean * mean, 1e-7);
  EXPECT_NEAR(d.cdf(4), [&] {
    double c = 0.0;
    for (long j = 0; j <= 4; ++j) c += d.pmf(j);
    return c;
  }(), 1e-14);
}

TEST(CountDistribution, RejectsBadSpecs) {
  EXPECT_THROW(CountDistribution(HurdleSpec{1.5, FamilySpec::zt_poisson(1.0)}), DomainError);
  EXPECT_THROW(CountDistribution(HurdleSpec{0.2, FamilySpec::poisson(1.0)}), DomainError);
  EXPECT_THROW(CountDistribution(MixtureSpec{{{0.5, FamilySpec::poisson(1.0)}}}), DomainError);
}
