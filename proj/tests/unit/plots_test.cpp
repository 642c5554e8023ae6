#include <gtest/gtest.h>

#include <regex>

#include "support.hpp"
#include "xstab/error.hpp"
#include "xstab/plots.hpp"

using namespace xstab;
using namespace xstab::testing;

namespace {

std::size_t count(const std::string& s, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = s.find(needle); pos != std::string::npos; pos = s.find(needle, pos + 1)) ++n;
  return n;
}

std::vector<std::string> attribute_values(const std::string& svg, const std::string& attr) {
  std::vector<std::string> out;
  const std::regex re(attr + "=\"([^\"]*)\"");
  for (std::sregex_iterator it(svg.begin(), svg.end(), re), end; it != end; ++it) out.push_back((*it)[1]);
  return out;
}

AttributionMatrix attribution(std::size_t rows, std::size_t features, std::vector<double> values) {
  AttributionMatrix a;
  a.feature_names = names(features);
  a.values = std::move(values);
  EXPECT_EQ(a.n_samples(), rows);
  return a;
}

FeatureMatrix matrix_for(std::size_t rows, std::size_t features) {
  std::vector<std::vector<double>> r;
  std::vector<ClassLabel> labels;
  for (std::size_t i = 0; i < rows; ++i) {
    std::vector<double> row;
    for (std::size_t j = 0; j < features; ++j) row.push_back(static_cast<double>(i + j));
    r.push_back(row);
    labels.push_back(ClassLabel::NC);
  }
  return make_matrix(names(features), r, labels);
}

std::string x_of_zero_axis(const std::string& svg) {
  std::smatch m;
  std::regex re("class=\"zero-axis\" x1=\"([^\"]*)\"");
  if (!std::regex_search(svg, m, re)) return "";
  return m[1];
}

}  // namespace

TEST(Beeswarm, OneMarkerPerSamplePerPlottedFeature) {
  const auto a = attribution(4, 3, {0.1, -0.2, 0.3, 0.2, 0.1, -0.1, 0.0, 0.4, 0.2, -0.3, 0.05, 0.1});
  PlotSpec spec;
  EXPECT_EQ(count(emit_beeswarm(a, matrix_for(4, 3), spec), "class=\"marker\""), 12u);
  spec.top_n = 2;
  EXPECT_EQ(count(emit_beeswarm(a, matrix_for(4, 3), spec), "class=\"marker\""), 8u);
}

TEST(Beeswarm, RowsOrderedByMeanAbsShap) {
  // mean |phi|: f1 = 0.1, f2 = 0.5, f3 = 0.3
  const auto a = attribution(2, 3, {0.1, 0.5, -0.3, -0.1, -0.5, 0.3});
  const auto svg = emit_beeswarm(a, matrix_for(2, 3), PlotSpec{});
  EXPECT_EQ(attribute_values(svg, "data-feature"), (std::vector<std::string>{"f2", "f3", "f1"}));
}

TEST(Beeswarm, AllZeroAttributionsSitOnTheAxis) {
  const auto a = attribution(3, 2, std::vector<double>(6, 0.0));
  const auto svg = emit_beeswarm(a, matrix_for(3, 2), PlotSpec{});
  const std::string axis = x_of_zero_axis(svg);
  ASSERT_FALSE(axis.empty());
  const auto cx = attribute_values(svg, "cx");
  ASSERT_EQ(cx.size(), 6u);
  for (const auto& x : cx) EXPECT_EQ(x, axis);
}

TEST(Beeswarm, ColourFollowsFeatureValue) {
  const auto a = attribution(2, 1, {0.1, 0.2});
  auto m = matrix_for(2, 1);
  PlotSpec spec;
  const auto fills = attribute_values(emit_beeswarm(a, m, spec), "fill");
  EXPECT_NE(std::find(fills.begin(), fills.end(), spec.low_color), fills.end());
  EXPECT_NE(std::find(fills.begin(), fills.end(), spec.high_color), fills.end());
  EXPECT_EQ(blend_color("#000000", "#ffffff", 0.5), "#808080");
}

TEST(Beeswarm, MisalignedInputsAreRejected) {
  const auto a = attribution(2, 2, {0, 0, 0, 0});
  EXPECT_THROW(emit_beeswarm(a, matrix_for(3, 2), PlotSpec{}), Error);
}

TEST(FiBar, SingleFeatureFillsTheWidth) {
  const auto one = emit_fi_bar(vec({0.3}, ImportanceSource::FI), PlotSpec{});
  const auto two = emit_fi_bar(vec({0.3, 0.3}, ImportanceSource::FI), PlotSpec{});
  const auto w1 = attribute_values(one, "class=\"bar\" x=\"[^\"]*\" y=\"[^\"]*\" width");
  const auto w2 = attribute_values(two, "class=\"bar\" x=\"[^\"]*\" y=\"[^\"]*\" width");
  ASSERT_EQ(w1.size(), 1u);
  ASSERT_EQ(w2.size(), 2u);
  EXPECT_EQ(w2[0], w1[0]);
  EXPECT_EQ(w2[1], w1[0]);
}

TEST(FiBar, DescendingOrderWithNameTieBreak) {
  const auto svg = emit_fi_bar(vec({0.1, 0.4, 0.4, -0.05}, ImportanceSource::FI, {"d", "b", "a", "c"}), PlotSpec{});
  EXPECT_EQ(attribute_values(svg, "data-feature"), (std::vector<std::string>{"a", "b", "d", "c"}));
  const auto widths = attribute_values(svg, "class=\"bar\" x=\"[^\"]*\" y=\"[^\"]*\" width");
  EXPECT_EQ(widths.back(), "0.00");  // negative importance draws an empty bar
}

TEST(PlotSpec, Validation) {
  PlotSpec spec;
  spec.top_n = 0;
  EXPECT_THROW(spec.validate(), ConfigError);
  spec = PlotSpec{};
  spec.low_color = "blue";
  EXPECT_THROW(spec.validate(), ConfigError);
}
