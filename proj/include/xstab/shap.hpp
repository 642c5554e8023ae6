#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "xstab/importance.hpp"
#include "xstab/models.hpp"
#include "xstab/preprocess.hpp"

namespace xstab {

// Reference rows that realize the interventional expectation.
struct BackgroundSet {
  std::vector<std::string> feature_names;
  std::vector<double> rows;  // row-major

  std::size_t n_features() const { return feature_names.size(); }
  std::size_t size() const { return n_features() ? rows.size() / n_features() : 0; }
  std::span<const double> row(std::size_t i) const { return {rows.data() + i * n_features(), n_features()}; }
};

// Up to max_rows real (non-oversampled) rows, chosen by seed, kept in matrix order.
BackgroundSet make_background(const FeatureMatrix& train, std::size_t max_rows, std::uint64_t seed);
BackgroundSet background_from(const FeatureMatrix& m);

inline constexpr std::size_t kMaxExactFeatures = 20;

struct ShapleyResult {
  std::vector<double> phi;
  double base = 0.0;        // mean prediction over the background
  double prediction = 0.0;  // f(x)
  // base + sum(phi) - f(x) before any correction.
  double residual = 0.0;
  std::vector<double> std_error;  // sampled estimator only
};

// Subset enumeration with interventional value function
// v(S) = mean_r f(x_S, r_rest). Throws EnumerationLimitError above 20 features.
ShapleyResult exact_shapley(const Predictor& p, std::span<const double> x, const BackgroundSet& bg,
                            std::size_t target);

struct SampledOptions {
  std::size_t n_permutations = 100;
  std::uint64_t seed = 0;
  // Spread the Monte-Carlo residual over features proportionally to |phi|.
  bool correct_additivity = true;
};

// Permutation-sampling estimator. Permutations are drawn in antithetic pairs
// (forward and reversed walk share a background row); background rows are
// cycled across pairs.
ShapleyResult sampled_shapley(const Predictor& p, std::span<const double> x, const BackgroundSet& bg,
                              std::size_t target, const SampledOptions& options);

struct ShapMethod {
  enum class Kind { Exact, Sampled };
  Kind kind = Kind::Exact;
  SampledOptions sampled;

  static ShapMethod exact() { return {}; }
  static ShapMethod sampled_with(std::size_t n_permutations, std::uint64_t seed, bool correct = true) {
    return ShapMethod{Kind::Sampled, SampledOptions{n_permutations, seed, correct}};
  }
  std::string describe() const;
};

struct AttributionMatrix {
  std::vector<std::string> feature_names;
  double base_value = 0.0;
  std::vector<double> values;  // row-major n_samples x n_features
  ClassLabel target = ClassLabel::AD;
  std::string method;

  std::size_t n_features() const { return feature_names.size(); }
  std::size_t n_samples() const { return n_features() ? values.size() / n_features() : 0; }
  std::span<const double> row(std::size_t i) const { return {values.data() + i * n_features(), n_features()}; }
  double at(std::size_t i, std::size_t j) const { return values[i * n_features() + j]; }
};

// Row i of the result explains row i of `m` for the class at `target_index`.
AttributionMatrix explain_dataset(const Predictor& p, const FeatureMatrix& m, const BackgroundSet& bg,
                                  const ShapMethod& method, std::size_t target_index, std::size_t jobs = 1);

// Class explained by default: the second scenario label for binary models,
// every class (one matrix each) for multiclass ones.
std::vector<AttributionMatrix> explain_default_targets(const Predictor& p, const FeatureMatrix& m,
                                                       const BackgroundSet& bg, const ShapMethod& method,
                                                       std::size_t jobs = 1);

// mean |phi| per feature plus mean signed phi.
ImportanceVector summarize(const AttributionMatrix& a);
// Multiclass: per-label summaries averaged across labels.
ImportanceVector summarize(std::span<const AttributionMatrix> per_label);

// Attribution file. One explanation is written flat; several go under
// "explanations". Both shapes are accepted on read.
struct AttributionFile {
  std::string task;
  std::string scenario;
  std::vector<AttributionMatrix> explanations;
};

std::string attributions_to_json(const AttributionFile& f);
AttributionFile attributions_from_json(std::string_view text);

}  // namespace xstab
