#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "countdiag/predictive.hpp"
#include "json.hpp"

namespace countdiag {

/// Breaks b_0 < ... < b_m define m bins (b_j, b_{j+1}]. With `open_tail`
/// the last bin also absorbs everything above b_m.
struct BreakSpec {
  std::vector<double> breaks;
  bool open_tail = false;

  std::size_t bins() const { return breaks.empty() ? 0 : breaks.size() - 1; }
  void validate() const;
};

/// b_j = j - 0.5 for j = 0..max_count+1, so bin j holds the integer j.
BreakSpec integer_breaks(long max_count, bool open_tail = false);

struct ObservedFrequencies {
  std::vector<double> obs;
  double overflow = 0.0;  // weight of observations outside every bin
};

/// obs_j = sum_i w_i 1(b_j < y_i <= b_{j+1}).
ObservedFrequencies observed_frequencies(std::span<const double> y,
                                         std::span<const double> w,
                                         const BreakSpec& breaks);

/// exp_j = sum_i w_i [F_i(floor b_{j+1}) - F_i(floor b_j)].
std::vector<double> expected_frequencies(const std::vector<CountDistribution>& dists,
                                         std::span<const double> w,
                                         const BreakSpec& breaks);

struct FrequencyTable {
  BreakSpec breaks;
  std::vector<double> obs;
  std::vector<double> exp;
  double total_weight = 0.0;
  double overflow = 0.0;

  std::size_t bins() const { return obs.size(); }
};

FrequencyTable frequency_table(std::span<const double> y, std::span<const double> w,
                               const std::vector<CountDistribution>& dists,
                               const BreakSpec& breaks);

enum class Style { hanging, standing, suspended };
enum class Scale { sqrt, raw };

std::string_view style_name(Style s);
std::string_view scale_name(Scale s);
Style parse_style(std::string_view name);
Scale parse_scale(std::string_view name);

struct RootogramCoords {
  Style style = Style::hanging;
  Scale scale = Scale::sqrt;
  std::vector<double> breaks;
  std::vector<double> bin_centers;
  std::vector<double> bar_bottom;
  std::vector<double> bar_top;
  std::vector<double> expected_curve;
  double reference_line = 0.0;
  double bar_width = 0.9;  // fraction of each bin's width

  std::size_t bins() const { return bin_centers.size(); }
};

RootogramCoords layout_rootogram(const FrequencyTable& freqs, Style style = Style::hanging,
                                 Scale scale = Scale::sqrt, double bar_width = 0.9);

/// Inverts the style equations back to (obs, exp).
FrequencyTable recover_frequencies(const RootogramCoords& coords);

nlohmann::json to_json(const FrequencyTable& freqs);
nlohmann::json to_json(const RootogramCoords& coords);

}  // namespace countdiag
