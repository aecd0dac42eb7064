#include "countdiag/predictive.hpp"

#include <boost/random/uniform_01.hpp>
#include <cmath>
#include <string>

#include "countdiag/error.hpp"

namespace countdiag {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double hurdle_pmf(const HurdleSpec& h, long j) {
  if (j < 0) return 0.0;
  if (j == 0) return h.zero_prob;
  return (1.0 - h.zero_prob) * zt_pmf(h.count, j);
}

}  // namespace

CountDistribution::CountDistribution(HurdleSpec h) : v_(h) {
  if (!(h.zero_prob >= 0.0 && h.zero_prob <= 1.0)) {
    throw DomainError("hurdle zero probability outside [0, 1]: " +
                      std::to_string(h.zero_prob));
  }
  if (!is_zero_truncated(h.count.kind)) {
    throw DomainError("hurdle count part must be a zero-truncated family");
  }
  h.count.validate();
}

CountDistribution::CountDistribution(MixtureSpec m) : v_(std::move(m)) {
  const auto& comps = std::get<MixtureSpec>(v_).components;
  if (comps.empty()) throw DomainError("mixture has no components");
  double total = 0.0;
  for (const auto& c : comps) {
    if (!(c.weight >= 0.0)) throw DomainError("negative mixture weight");
    c.family.validate();
    total += c.weight;
  }
  if (std::abs(total - 1.0) > 1e-8) {
    throw DomainError("mixture weights must sum to 1, got " +
                      std::to_string(total));
  }
}

double CountDistribution::pmf(long j) const {
  return std::visit(
      overloaded{
          [&](const FamilySpec& f) { return count_pmf(f, j); },
          [&](const HurdleSpec& h) { return hurdle_pmf(h, j); },
          [&](const MixtureSpec& m) {
            double s = 0.0;
            for (const auto& c : m.components) s += c.weight * count_pmf(c.family, j);
            return s;
          },
      },
      v_);
}

std::vector<double> CountDistribution::cdf_table(long jmax) const {
  if (jmax < 0) return {};
  return std::visit(
      overloaded{
          [&](const FamilySpec& f) { return countdiag::cdf_table(f, jmax); },
          [&](const HurdleSpec& h) {
            auto t = countdiag::cdf_table(h.count, jmax);
            for (auto& v : t) v = h.zero_prob + (1.0 - h.zero_prob) * v;
            return t;
          },
          [&](const MixtureSpec& m) {
            std::vector<double> t(static_cast<std::size_t>(jmax) + 1, 0.0);
            for (const auto& c : m.components) {
              const auto part = countdiag::cdf_table(c.family, jmax);
              for (std::size_t k = 0; k < t.size(); ++k) t[k] += c.weight * part[k];
            }
            for (auto& v : t) v = std::min(v, 1.0);
            return t;
          },
      },
      v_);
}

double CountDistribution::cdf(long j) const {
  if (j < 0) return 0.0;
  return cdf_table(j).back();
}

double CountDistribution::mean() const {
  return std::visit(
      overloaded{
          [](const FamilySpec& f) { return family_mean(f); },
          [](const HurdleSpec& h) {
            return (1.0 - h.zero_prob) * family_mean(h.count);
          },
          [](const MixtureSpec& m) {
            double s = 0.0;
            for (const auto& c : m.components) s += c.weight * family_mean(c.family);
            return s;
          },
      },
      v_);
}

double CountDistribution::variance() const {
  return std::visit(
      overloaded{
          [](const FamilySpec& f) { return family_variance(f); },
          [](const HurdleSpec& h) {
            // E[Y^2] = (1 - p0) E[Y^2 | Y > 0]
            const double m = family_mean(h.count);
            const double second = family_variance(h.count) + m * m;
            const double mean = (1.0 - h.zero_prob) * m;
            return (1.0 - h.zero_prob) * second - mean * mean;
          },
          [](const MixtureSpec& m) {
            double first = 0.0, second = 0.0;
            for (const auto& c : m.components) {
              const double mu = family_mean(c.family);
              first += c.weight * mu;
              second += c.weight * (family_variance(c.family) + mu * mu);
            }
            return second - first * first;
          },
      },
      v_);
}

std::int64_t CountDistribution::sample(Rng& rng) const {
  return std::visit(
      overloaded{
          [&](const FamilySpec& f) { return count_sample(f, rng); },
          [&](const HurdleSpec& h) -> std::int64_t {
            boost::random::uniform_01<double> u;
            if (u(rng) < h.zero_prob) return 0;
            return count_sample(h.count, rng);
          },
          [&](const MixtureSpec& m) {
            boost::random::uniform_01<double> u;
            const double draw = u(rng);
            double acc = 0.0;
            for (const auto& c : m.components) {
              acc += c.weight;
              if (draw < acc) return count_sample(c.family, rng);
            }
            return count_sample(m.components.back().family, rng);
          },
      },
      v_);
}

}  // namespace countdiag
