#include <algorithm>
#include <map>

#include <fmt/format.h>

#include "xstab/common.hpp"
#include "xstab/error.hpp"
#include "xstab/preprocess.hpp"

namespace xstab {

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double d = a[j] - b[j];
    s += d * d;
  }
  return s;
}

// k nearest same-label rows for every member; ties broken by row index.
std::vector<std::vector<std::size_t>> nearest_neighbors(const FeatureMatrix& m, const std::vector<std::size_t>& members,
                                                        std::size_t k) {
  std::vector<std::vector<std::size_t>> out(members.size());
  std::vector<std::pair<double, std::size_t>> cand;
  for (std::size_t a = 0; a < members.size(); ++a) {
    cand.clear();
    for (std::size_t b = 0; b < members.size(); ++b) {
      if (a == b) continue;
      cand.emplace_back(squared_distance(m.row(members[a]), m.row(members[b])), members[b]);
    }
    std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k), cand.end());
    for (std::size_t i = 0; i < k; ++i) out[a].push_back(cand[i].second);
  }
  return out;
}

}  // namespace

FeatureMatrix smote_oversample(const FeatureMatrix& m, std::size_t k_neighbors, std::uint64_t seed) {
  std::map<ClassLabel, std::vector<std::size_t>> by_label;
  for (std::size_t i = 0; i < m.n_rows(); ++i) by_label[m.labels[i]].push_back(i);
  if (by_label.size() < 2) throw OversampleError("oversampling needs at least two labels");
  if (k_neighbors == 0) throw OversampleError("k_neighbors must be positive");

  std::size_t majority = 0;
  for (const auto& [label, rows] : by_label) majority = std::max(majority, rows.size());

  FeatureMatrix out = m;
  const std::size_t p = m.n_features();
  Rng rng(seed);
  std::vector<double> synth(p);
  for (const auto& [label, rows] : by_label) {
    if (rows.size() == majority) continue;
    if (rows.size() < 2) {
      throw OversampleError(fmt::format("label {} has a single row; SMOTE needs at least two", to_string(label)));
    }
    const std::size_t k = std::min(k_neighbors, rows.size() - 1);
    const auto neighbors = nearest_neighbors(m, rows, k);
    const std::size_t needed = majority - rows.size();
    for (std::size_t t = 0; t < needed; ++t) {
      const std::size_t a = rng.index(rows.size());
      const std::size_t nn = neighbors[a][rng.index(k)];
      const double lambda = rng.uniform();
      auto x = m.row(rows[a]);
      auto y = m.row(nn);
      for (std::size_t j = 0; j < p; ++j) {
        const double v = x[j] + lambda * (y[j] - x[j]);
        synth[j] = std::clamp(v, std::min(x[j], y[j]), std::max(x[j], y[j]));
      }
      out.values.insert(out.values.end(), synth.begin(), synth.end());
      out.labels.push_back(label);
      out.subject_ids.push_back(fmt::format("smote:{}:{}", to_string(label), t));
      out.synthetic.push_back(1);
    }
  }
  return out;
}

}  // namespace xstab
