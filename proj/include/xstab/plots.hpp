#pragma once

#include <cstddef>
#include <string>

#include "xstab/importance.hpp"
#include "xstab/preprocess.hpp"
#include "xstab/shap.hpp"

namespace xstab {

struct PlotSpec {
  std::size_t top_n = 10;
  int width = 800;
  int row_height = 36;  // total height = margins + top_n rows
  std::string low_color = "#1f4fe0";   // low feature values
  std::string high_color = "#e0203a";  // high feature values

  void validate() const;
};

// Static SVG documents. Markers carry class="marker", bars class="bar" and
// every feature row a data-feature attribute so the output can be audited.
std::string emit_beeswarm(const AttributionMatrix& a, const FeatureMatrix& m, const PlotSpec& spec);
std::string emit_fi_bar(const ImportanceVector& v, const PlotSpec& spec);

// Linear RGB blend of two #rrggbb colours, t in [0, 1].
std::string blend_color(const std::string& low, const std::string& high, double t);

}  // namespace xstab
