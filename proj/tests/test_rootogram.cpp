#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "countdiag/error.hpp"
#include "countdiag/model.hpp"
#include "countdiag/rootogram.hpp"
#include "countdiag/svg.hpp"

using namespace countdiag;

namespace {

const std::string data_dir = COUNTDIAG_DATA_DIR;

std::span<const double> span_of(const Eigen::VectorXd& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

Model crab_model(ModelKind kind, const std::string& formula = "satellites ~ width + color") {
  ModelSpec spec;
  spec.kind = kind;
  spec.formula = parse_formula(formula);
  return Model::fit(spec, read_table(data_dir + "/crabs.csv"));
}

FrequencyTable table_of(std::vector<double> obs, std::vector<double> exp) {
  FrequencyTable t;
  t.breaks = integer_breaks(static_cast<long>(obs.size()) - 1);
  t.obs = std::move(obs);
  t.exp = std::move(exp);
  t.total_weight = std::accumulate(t.obs.begin(), t.obs.end(), 0.0);
  return t;
}

int count(const std::string& s, const std::string& needle) {
  int n = 0;
  for (auto pos = s.find(needle); pos != std::string::npos; pos = s.find(needle, pos + 1)) ++n;
  return n;
}

}  // namespace

TEST(Breaks, IntegerBreaks) {
  const auto b = integer_breaks(2);
  EXPECT_EQ(b.breaks, (std::vector<double>{-0.5, 0.5, 1.5, 2.5}));
  EXPECT_EQ(b.bins(), 3u);
  EXPECT_THROW((BreakSpec{{0.0, 0.0}, false}.validate()), DomainError);
  EXPECT_THROW((BreakSpec{{0.0}, false}.validate()), DomainError);
}

TEST(Observed, DirectAndWeightedCounts) {
  const std::vector<double> y{0, 0, 1, 2};
  const std::vector<double> unit(4, 1.0);
  EXPECT_EQ(observed_frequencies(y, unit, integer_breaks(2)).obs,
            (std::vector<double>{2, 1, 1}));
  const std::vector<double> w{0.5, 0.5, 2, 1};
  EXPECT_EQ(observed_frequencies(y, w, integer_breaks(2)).obs, (std::vector<double>{1, 2, 1}));
}

TEST(Observed, OverflowAndOpenTail) {
  const std::vector<double> y{0, 1, 5, 9};
  const std::vector<double> w(4, 1.0);
  const auto closed = observed_frequencies(y, w, integer_breaks(2));
  EXPECT_EQ(closed.overflow, 2.0);
  const auto open = observed_frequencies(y, w, integer_breaks(2, true));
  EXPECT_EQ(open.overflow, 0.0);
  EXPECT_EQ(open.obs[2], 2.0);
}

TEST(Observed, NegativeWeightRejected) {
  const std::vector<double> y{0, 1};
  const std::vector<double> w{1.0, -0.5};
  EXPECT_THROW(observed_frequencies(y, w, integer_breaks(1)), DomainError);
}

TEST(Observed, CrabZerosMatchFixture) {
  const auto t = read_table(data_dir + "/crabs.csv");
  const auto& y = t.numeric("satellites");
  const std::vector<double> w(y.size(), 1.0);
  const auto obs = observed_frequencies(y, w, integer_breaks(15));
  EXPECT_EQ(obs.obs[0], static_cast<double>(std::count(y.begin(), y.end(), 0.0)));
}

TEST(Expected, SinglePoissonObservation) {
  const std::vector<CountDistribution> d{FamilySpec::poisson(2.0)};
  const std::vector<double> w{1.0};
  const auto e = expected_frequencies(d, w, integer_breaks(4));
  EXPECT_NEAR(e[2], 2.0 * std::exp(-2.0), 1e-15);
  EXPECT_NEAR(e[2], 0.270671, 1e-6);
}

TEST(Expected, WiderBinsSumPmf) {
  const std::vector<CountDistribution> d{FamilySpec::negbin(3.0, 2.0)};
  const std::vector<double> w{2.0};
  const BreakSpec b{{-0.5, 1.5, 4.5}, false};
  const auto e = expected_frequencies(d, w, b);
  EXPECT_NEAR(e[0], 2.0 * (count_pmf(FamilySpec::negbin(3.0, 2.0), 0) +
                           count_pmf(FamilySpec::negbin(3.0, 2.0), 1)),
              1e-14);
}

TEST(Expected, NormalizationOnCrabFits) {
  for (auto kind : {ModelKind::poisson, ModelKind::negbin, ModelKind::hurdle_poisson,
                    ModelKind::hurdle_negbin}) {
    const auto m = crab_model(kind);
    const auto e = expected_frequencies(m.distributions(), span_of(m.weights()),
                                        integer_breaks(15, true));
    EXPECT_NEAR(std::accumulate(e.begin(), e.end(), 0.0), 173.0, 1e-6) << model_kind_name(kind);
  }
}

TEST(Expected, HurdleFitsZeroExactly) {
  const auto m = crab_model(ModelKind::hurdle_negbin);
  const auto t = frequency_table(span_of(m.response()), span_of(m.weights()), m.distributions(),
                                 integer_breaks(15));
  EXPECT_NEAR(t.exp[0], t.obs[0], 1e-6);
}

TEST(Expected, MismatchedSizes) {
  const std::vector<CountDistribution> d{FamilySpec::poisson(2.0)};
  const std::vector<double> w{1.0, 1.0};
  EXPECT_THROW(expected_frequencies(d, w, integer_breaks(3)), DataError);
}

TEST(Layout, StyleEquations) {
  const auto perfect = layout_rootogram(table_of({4, 9}, {4, 9}));
  EXPECT_EQ(perfect.bar_bottom, (std::vector<double>{0.0, 0.0}));

  const auto hanging = layout_rootogram(table_of({9}, {4}), Style::hanging);
  EXPECT_EQ(hanging.bar_top[0], 2.0);
  EXPECT_EQ(hanging.bar_bottom[0], -1.0);

  const auto suspended = layout_rootogram(table_of({4}, {1}), Style::suspended);
  EXPECT_EQ(suspended.bar_bottom[0], 0.0);
  EXPECT_EQ(suspended.bar_top[0], -1.0);

  const auto standing = layout_rootogram(table_of({9, 1}, {4, 2}), Style::standing);
  EXPECT_EQ(standing.bar_bottom, (std::vector<double>{0.0, 0.0}));
  EXPECT_EQ(standing.bar_top, (std::vector<double>{3.0, 1.0}));

  const auto raw = layout_rootogram(table_of({9}, {4}), Style::hanging, Scale::raw);
  EXPECT_EQ(raw.bar_top[0], 4.0);
  EXPECT_EQ(raw.bar_bottom[0], -5.0);
  EXPECT_EQ(hanging.bar_width, 0.9);
  EXPECT_EQ(hanging.bin_centers[0], 0.0);
}

TEST(Layout, RecoveryRoundTrip) {
  const auto m = crab_model(ModelKind::negbin);
  const auto t = frequency_table(span_of(m.response()), span_of(m.weights()), m.distributions(),
                                 integer_breaks(15));
  for (auto style : {Style::hanging, Style::standing, Style::suspended}) {
    for (auto scale : {Scale::sqrt, Scale::raw}) {
      const auto back = recover_frequencies(layout_rootogram(t, style, scale));
      for (std::size_t j = 0; j < t.bins(); ++j) {
        EXPECT_NEAR(back.obs[j], t.obs[j], 1e-12);
        EXPECT_NEAR(back.exp[j], t.exp[j], 1e-12);
      }
    }
  }
}

TEST(Layout, WeightScaling) {
  const auto m = crab_model(ModelKind::poisson);
  const double c = 3.7;
  const Eigen::VectorXd w2 = c * m.weights();
  const auto dists = m.distributions();
  const auto a = frequency_table(span_of(m.response()), span_of(m.weights()), dists,
                                 integer_breaks(15));
  const auto b = frequency_table(span_of(m.response()), span_of(w2), dists, integer_breaks(15));
  const auto la = layout_rootogram(a), lb = layout_rootogram(b);
  for (std::size_t j = 0; j < a.bins(); ++j) {
    EXPECT_NEAR(b.obs[j], c * a.obs[j], 1e-9);
    EXPECT_NEAR(b.exp[j], c * a.exp[j], 1e-9);
    EXPECT_NEAR(lb.bar_bottom[j], std::sqrt(c) * la.bar_bottom[j], 1e-9);
    EXPECT_NEAR(lb.bar_top[j], std::sqrt(c) * la.bar_top[j], 1e-9);
    EXPECT_EQ(b.exp[j] > b.obs[j], a.exp[j] > a.obs[j]);
  }
}

TEST(Layout, PoissonCrabWavePattern) {
  const auto m = crab_model(ModelKind::poisson);
  const auto t = frequency_table(span_of(m.response()), span_of(m.weights()), m.distributions(),
                                 integer_breaks(15));
  const auto c = layout_rootogram(t);
  ASSERT_EQ(c.bins(), 16u);
  EXPECT_LT(c.bar_bottom[0], 0.0);
  for (int j = 1; j <= 4; ++j) EXPECT_GT(c.bar_bottom[static_cast<std::size_t>(j)], 0.0) << j;
}

TEST(Layout, StyleParsing) {
  EXPECT_EQ(parse_style("suspended"), Style::suspended);
  EXPECT_EQ(parse_scale("raw"), Scale::raw);
  EXPECT_EQ(style_name(Style::hanging), "hanging");
  EXPECT_THROW(parse_style("floating"), ConfigError);
}

TEST(Json, StableKeys) {
  const auto j = to_json(layout_rootogram(table_of({9, 1}, {4, 2})));
  EXPECT_EQ(j["schema"], "rootogram/v1");
  for (const char* key : {"style", "scale", "breaks", "bin_centers", "bar_bottom", "bar_top",
                          "expected_curve", "reference_line", "bar_width"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
}

TEST(Svg, StructureAndDeterminism) {
  const auto m = crab_model(ModelKind::poisson);
  const auto t = frequency_table(span_of(m.response()), span_of(m.weights()), m.distributions(),
                                 integer_breaks(15));
  const auto c = layout_rootogram(t);
  const auto svg = render_svg(c);
  EXPECT_EQ(count(svg, "<rect"), 16);
  EXPECT_EQ(count(svg, "<polyline"), 1);
  EXPECT_EQ(svg, render_svg(c));
  EXPECT_THROW(render_svg(RootogramCoords{}), DomainError);
}
