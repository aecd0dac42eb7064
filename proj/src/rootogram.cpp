#include "countdiag/rootogram.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "countdiag/error.hpp"

namespace countdiag {

void BreakSpec::validate() const {
  if (breaks.size() < 2) throw DomainError("breaks need at least two points");
  for (std::size_t j = 0; j < breaks.size(); ++j) {
    if (!std::isfinite(breaks[j])) throw DomainError("breaks must be finite");
    if (j > 0 && !(breaks[j] > breaks[j - 1])) {
      throw DomainError("breaks must be strictly increasing");
    }
  }
}

BreakSpec integer_breaks(long max_count, bool open_tail) {
  if (max_count < 0) throw DomainError("max count must be nonnegative");
  BreakSpec b;
  b.open_tail = open_tail;
  for (long j = 0; j <= max_count + 1; ++j) b.breaks.push_back(static_cast<double>(j) - 0.5);
  return b;
}

ObservedFrequencies observed_frequencies(std::span<const double> y, std::span<const double> w,
                                         const BreakSpec& breaks) {
  breaks.validate();
  if (y.size() != w.size()) {
    throw DataError("observed frequencies: " + std::to_string(y.size()) + " responses but " +
                    std::to_string(w.size()) + " weights");
  }
  const auto& b = breaks.breaks;
  ObservedFrequencies out;
  out.obs.assign(breaks.bins(), 0.0);
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (w[i] < 0.0 || !std::isfinite(w[i])) {
      throw DomainError("weight " + std::to_string(i + 1) + " is negative or not finite");
    }
    if (y[i] <= b.front()) {
      out.overflow += w[i];
      continue;
    }
    // First break >= y gives the bin's upper edge.
    const auto it = std::lower_bound(b.begin(), b.end(), y[i]);
    if (it == b.end()) {
      if (breaks.open_tail) {
        out.obs.back() += w[i];
      } else {
        out.overflow += w[i];
      }
      continue;
    }
    out.obs[static_cast<std::size_t>(it - b.begin()) - 1] += w[i];
  }
  return out;
}

std::vector<double> expected_frequencies(const std::vector<CountDistribution>& dists,
                                         std::span<const double> w, const BreakSpec& breaks) {
  breaks.validate();
  if (dists.size() != w.size()) {
    throw DataError("expected frequencies: " + std::to_string(dists.size()) +
                    " distributions but " + std::to_string(w.size()) + " weights");
  }
  const auto& b = breaks.breaks;
  const std::size_t m = breaks.bins();
  std::vector<long> edge(b.size());
  for (std::size_t j = 0; j < b.size(); ++j) edge[j] = static_cast<long>(std::floor(b[j]));
  const long jmax = std::max(edge.back(), 0L);

  std::vector<double> exp(m, 0.0);
  for (std::size_t i = 0; i < dists.size(); ++i) {
    if (w[i] < 0.0 || !std::isfinite(w[i])) {
      throw DomainError("weight " + std::to_string(i + 1) + " is negative or not finite");
    }
    if (w[i] == 0.0) continue;
    const auto table = dists[i].cdf_table(jmax);
    auto cdf = [&](long j) { return j < 0 ? 0.0 : table[static_cast<std::size_t>(j)]; };
    for (std::size_t j = 0; j < m; ++j) {
      const double upper = (j + 1 == m && breaks.open_tail) ? 1.0 : cdf(edge[j + 1]);
      exp[j] += w[i] * std::max(0.0, upper - cdf(edge[j]));
    }
  }
  return exp;
}

FrequencyTable frequency_table(std::span<const double> y, std::span<const double> w,
                               const std::vector<CountDistribution>& dists,
                               const BreakSpec& breaks) {
  FrequencyTable t;
  auto observed = observed_frequencies(y, w, breaks);
  t.breaks = breaks;
  t.obs = std::move(observed.obs);
  t.overflow = observed.overflow;
  t.exp = expected_frequencies(dists, w, breaks);
  for (double wi : w) t.total_weight += wi;
  return t;
}

std::string_view style_name(Style s) {
  switch (s) {
    case Style::hanging: return "hanging";
    case Style::standing: return "standing";
    case Style::suspended: return "suspended";
  }
  return "hanging";
}

std::string_view scale_name(Scale s) { return s == Scale::sqrt ? "sqrt" : "raw"; }

Style parse_style(std::string_view name) {
  if (name == "hanging") return Style::hanging;
  if (name == "standing") return Style::standing;
  if (name == "suspended") return Style::suspended;
  throw ConfigError("unknown style '" + std::string(name) +
                    "' (expected hanging, standing or suspended)");
}

Scale parse_scale(std::string_view name) {
  if (name == "sqrt") return Scale::sqrt;
  if (name == "raw") return Scale::raw;
  throw ConfigError("unknown scale '" + std::string(name) + "' (expected sqrt or raw)");
}

RootogramCoords layout_rootogram(const FrequencyTable& freqs, Style style, Scale scale,
                                 double bar_width) {
  const std::size_t m = freqs.bins();
  if (m == 0 || freqs.exp.size() != m || freqs.breaks.bins() != m) {
    throw DomainError("rootogram needs a nonempty frequency table");
  }
  auto tr = [scale](double v) { return scale == Scale::sqrt ? std::sqrt(v) : v; };
  RootogramCoords c;
  c.style = style;
  c.scale = scale;
  c.bar_width = bar_width;
  c.breaks = freqs.breaks.breaks;
  for (std::size_t j = 0; j < m; ++j) {
    const double o = tr(freqs.obs[j]);
    const double e = tr(freqs.exp[j]);
    c.bin_centers.push_back(0.5 * (c.breaks[j] + c.breaks[j + 1]));
    c.expected_curve.push_back(e);
    switch (style) {
      case Style::hanging:
        c.bar_top.push_back(e);
        c.bar_bottom.push_back(e - o);
        break;
      case Style::standing:
        c.bar_bottom.push_back(0.0);
        c.bar_top.push_back(o);
        break;
      case Style::suspended:
        c.bar_bottom.push_back(0.0);
        c.bar_top.push_back(e - o);
        break;
    }
  }
  return c;
}

FrequencyTable recover_frequencies(const RootogramCoords& c) {
  auto inv = [&](double v) { return c.scale == Scale::sqrt ? v * v : v; };
  FrequencyTable t;
  t.breaks.breaks = c.breaks;
  for (std::size_t j = 0; j < c.bins(); ++j) {
    double o = 0.0;
    switch (c.style) {
      case Style::hanging: o = c.bar_top[j] - c.bar_bottom[j]; break;
      case Style::standing: o = c.bar_top[j]; break;
      case Style::suspended: o = c.expected_curve[j] - c.bar_top[j]; break;
    }
    t.obs.push_back(inv(o));
    t.exp.push_back(inv(c.expected_curve[j]));
  }
  return t;
}

nlohmann::json to_json(const FrequencyTable& freqs) {
  return {
      {"breaks", freqs.breaks.breaks},
      {"open_tail", freqs.breaks.open_tail},
      {"obs", freqs.obs},
      {"exp", freqs.exp},
      {"total_weight", freqs.total_weight},
      {"overflow", freqs.overflow},
  };
}

nlohmann::json to_json(const RootogramCoords& c) {
  return {
      {"schema", "rootogram/v1"},
      {"style", style_name(c.style)},
      {"scale", scale_name(c.scale)},
      {"breaks", c.breaks},
      {"bin_centers", c.bin_centers},
      {"bar_bottom", c.bar_bottom},
      {"bar_top", c.bar_top},
      {"expected_curve", c.expected_curve},
      {"reference_line", c.reference_line},
      {"bar_width", c.bar_width},
  };
}

}  // namespace countdiag
