#include "xstab/plots.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <limits>

#include <fmt/format.h>

#include "xstab/common.hpp"
#include "xstab/error.hpp"
#include "xstab/stability.hpp"

namespace xstab {

namespace {

constexpr int kLabelWidth = 200;
constexpr int kMargin = 24;
constexpr int kAxisHeight = 40;

std::array<int, 3> parse_hex(const std::string& c) {
  if (c.size() != 7 || c[0] != '#') throw ConfigError(fmt::format("colour '{}' is not #rrggbb", c));
  std::array<int, 3> rgb{};
  for (int k = 0; k < 3; ++k) {
    const std::string part = c.substr(1 + 2 * k, 2);
    char* end = nullptr;
    rgb[k] = static_cast<int>(std::strtol(part.c_str(), &end, 16));
    if (end != part.c_str() + 2) throw ConfigError(fmt::format("colour '{}' is not #rrggbb", c));
  }
  return rgb;
}

std::string escape_xml(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string coord(double v) { return format_fixed(v, 2); }

std::string svg_open(int width, int height) {
  return fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\" "
      "font-family=\"sans-serif\" font-size=\"12\">\n"
      "<rect x=\"0\" y=\"0\" width=\"{0}\" height=\"{1}\" fill=\"#ffffff\"/>\n",
      width, height);
}

// Deterministic jitter in [-1, 1] from the (feature, sample) pair.
double jitter(std::size_t feature, std::size_t sample) {
  const std::uint64_t h = derive_seed(0x6a6974746572ULL, {feature, sample});
  return static_cast<double>(h >> 11) / static_cast<double>(1ULL << 53) * 2.0 - 1.0;
}

}  // namespace

void PlotSpec::validate() const {
  if (top_n < 1) throw ConfigError("plot top_n must be at least 1");
  if (width < kLabelWidth + 2 * kMargin + 50) throw ConfigError(fmt::format("plot width {} is too small", width));
  if (row_height < 4) throw ConfigError("plot row_height must be at least 4");
  parse_hex(low_color);
  parse_hex(high_color);
}

std::string blend_color(const std::string& low, const std::string& high, double t) {
  const auto a = parse_hex(low), b = parse_hex(high);
  t = std::clamp(t, 0.0, 1.0);
  std::array<int, 3> c{};
  for (int k = 0; k < 3; ++k) c[k] = static_cast<int>(std::lround(a[k] + (b[k] - a[k]) * t));
  return fmt::format("#{:02x}{:02x}{:02x}", c[0], c[1], c[2]);
}

std::string emit_beeswarm(const AttributionMatrix& a, const FeatureMatrix& m, const PlotSpec& spec) {
  spec.validate();
  if (a.feature_names != m.feature_names || a.n_samples() != m.n_rows()) {
    throw Error(fmt::format("beeswarm: attributions ({} x {}) are not aligned with the feature matrix ({} x {})",
                            a.n_samples(), a.n_features(), m.n_rows(), m.n_features()));
  }
  const ImportanceVector summary = summarize(a);
  const RankedList ranked(summary);
  const auto features = ranked.top_k(spec.top_n);

  double extent = 0.0;
  for (double v : a.values) extent = std::max(extent, std::abs(v));
  if (extent == 0.0) extent = 1.0;

  const int plot_left = kLabelWidth;
  const int plot_width = spec.width - kLabelWidth - kMargin;
  const int height = kMargin + static_cast<int>(features.size()) * spec.row_height + kAxisHeight;
  auto x_of = [&](double phi) { return plot_left + (phi + extent) / (2.0 * extent) * plot_width; };
  const double zero_x = x_of(0.0);

  std::string out = svg_open(spec.width, height);
  out += fmt::format("<line class=\"zero-axis\" x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"#888888\"/>\n",
                     coord(zero_x), kMargin, height - kAxisHeight);
  for (std::size_t r = 0; r < features.size(); ++r) {
    const auto& name = features[r];
    const std::size_t j = static_cast<std::size_t>(
        std::find(a.feature_names.begin(), a.feature_names.end(), name) - a.feature_names.begin());
    const double cy = kMargin + (static_cast<double>(r) + 0.5) * spec.row_height;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t i = 0; i < m.n_rows(); ++i) {
      lo = std::min(lo, m.at(i, j));
      hi = std::max(hi, m.at(i, j));
    }
    out += fmt::format("<g class=\"feature-row\" data-feature=\"{}\">\n", escape_xml(name));
    out += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"end\" dominant-baseline=\"middle\">{}</text>\n",
                       plot_left - 8, coord(cy), escape_xml(name));
    for (std::size_t i = 0; i < a.n_samples(); ++i) {
      const double t = hi > lo ? (m.at(i, j) - lo) / (hi - lo) : 0.5;
      const double y = cy + jitter(j, i) * spec.row_height * 0.35;
      out += fmt::format("<circle class=\"marker\" cx=\"{}\" cy=\"{}\" r=\"2.5\" fill=\"{}\" data-shap=\"{}\"/>\n",
                         coord(x_of(a.at(i, j))), coord(y), blend_color(spec.low_color, spec.high_color, t),
                         format_double(a.at(i, j)));
    }
    out += "</g>\n";
  }
  const int axis_y = height - kAxisHeight + 16;
  out += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">SHAP value (impact on {} probability)</text>\n",
                     coord(plot_left + plot_width / 2.0), axis_y + 14, to_string(a.target));
  out += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"start\">{}</text>\n", plot_left, axis_y,
                     format_fixed(-extent, 3));
  out += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>\n", plot_left + plot_width, axis_y,
                     format_fixed(extent, 3));
  out += "</svg>\n";
  return out;
}

std::string emit_fi_bar(const ImportanceVector& v, const PlotSpec& spec) {
  spec.validate();
  const RankedList ranked(v);
  const std::size_t n = std::min(spec.top_n, ranked.names().size());
  double max_score = 0.0;
  for (std::size_t r = 0; r < n; ++r) max_score = std::max(max_score, ranked.scores()[r]);

  const int plot_left = kLabelWidth;
  const int plot_width = spec.width - kLabelWidth - kMargin - 60;
  const int height = kMargin + static_cast<int>(n) * spec.row_height + kAxisHeight;
  std::string out = svg_open(spec.width, height);
  for (std::size_t r = 0; r < n; ++r) {
    const auto& name = ranked.names()[r];
    const double score = ranked.scores()[r];
    const double len = max_score > 0.0 ? std::max(score, 0.0) / max_score * plot_width : 0.0;
    const double y = kMargin + static_cast<double>(r) * spec.row_height;
    out += fmt::format("<g class=\"feature-row\" data-feature=\"{}\">\n", escape_xml(name));
    out += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"end\" dominant-baseline=\"middle\">{}</text>\n",
                       plot_left - 8, coord(y + spec.row_height / 2.0), escape_xml(name));
    out += fmt::format(
        "<rect class=\"bar\" x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\" data-score=\"{}\"/>\n",
        plot_left, coord(y + spec.row_height * 0.15), coord(len), coord(spec.row_height * 0.7), spec.low_color,
        format_double(score));
    out += fmt::format("<text x=\"{}\" y=\"{}\" dominant-baseline=\"middle\">{}</text>\n", coord(plot_left + len + 6),
                       coord(y + spec.row_height / 2.0), format_fixed(score, 4));
    out += "</g>\n";
  }
  out += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
                     coord(plot_left + plot_width / 2.0), height - 14,
                     v.source == ImportanceSource::FI ? "Permutation importance (mean accuracy drop)"
                                                      : "Mean |SHAP value|");
  out += "</svg>\n";
  return out;
}

}  // namespace xstab
