#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include "countdiag/dist.hpp"

namespace countdiag {

/// Two-part distribution: P(0) = zero_prob, and the positive counts follow
/// the zero-truncated `count` family scaled by 1 - zero_prob.
struct HurdleSpec {
  double zero_prob = 0.0;
  FamilySpec count;  // zt_poisson or zt_negbin
};

struct MixtureComponent {
  double weight = 1.0;
  FamilySpec family;
};

struct MixtureSpec {
  std::vector<MixtureComponent> components;
};

/// Fitted count distribution of a single observation, whichever model
/// produced it.
class CountDistribution {
 public:
  using Variant = std::variant<FamilySpec, HurdleSpec, MixtureSpec>;

  CountDistribution(FamilySpec f) : v_(f) {}  // NOLINT implicit
  CountDistribution(HurdleSpec h);            // NOLINT implicit
  CountDistribution(MixtureSpec m);           // NOLINT implicit

  const Variant& get() const noexcept { return v_; }

  double pmf(long j) const;
  double cdf(long j) const;
  /// F(0..jmax) in one pass.
  std::vector<double> cdf_table(long jmax) const;

  double mean() const;
  double variance() const;

  std::int64_t sample(Rng& rng) const;

 private:
  Variant v_;
};

}  // namespace countdiag
