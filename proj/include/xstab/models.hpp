#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "xstab/importance.hpp"
#include "xstab/preprocess.hpp"
#include "xstab/tabular.hpp"

namespace xstab {

// Trained classifier. Probabilities are ordered like classes() and sum to 1.
class Predictor {
 public:
  Predictor(std::vector<std::string> feature_names, std::vector<ClassLabel> classes)
      : feature_names_(std::move(feature_names)), classes_(std::move(classes)) {}
  virtual ~Predictor() = default;

  // `out` has classes().size() slots.
  virtual void predict_proba(std::span<const double> row, std::span<double> out) const = 0;
  std::vector<double> predict_proba(std::span<const double> row) const;
  // Argmax, lowest class index on ties.
  std::size_t predict_index(std::span<const double> row) const;

  // For every feature subset S (bit j of the mask set = feature j taken from x,
  // otherwise from r): v[mask * n_classes + c] += weight * f_c(composite row).
  // v has 2^x.size() * n_classes slots. Overrides must match the generic loop.
  virtual void accumulate_subset_values(std::span<const double> x, std::span<const double> r, double weight,
                                        std::span<double> v) const;

  const std::vector<std::string>& feature_names() const { return feature_names_; }
  const std::vector<ClassLabel>& classes() const { return classes_; }
  std::size_t n_classes() const { return classes_.size(); }

 private:
  std::vector<std::string> feature_names_;
  std::vector<ClassLabel> classes_;
};

// Wraps an arbitrary function; used for fixtures and external models.
class FunctionPredictor : public Predictor {
 public:
  using Fn = std::function<void(std::span<const double>, std::span<double>)>;
  FunctionPredictor(std::vector<std::string> feature_names, std::vector<ClassLabel> classes, Fn fn)
      : Predictor(std::move(feature_names), std::move(classes)), fn_(std::move(fn)) {}

  // Binary predictor whose positive-class probability is `positive(row)`.
  static std::shared_ptr<FunctionPredictor> binary(std::vector<std::string> feature_names,
                                                   std::function<double(std::span<const double>)> positive);

  using Predictor::predict_proba;
  void predict_proba(std::span<const double> row, std::span<double> out) const override { fn_(row, out); }

 private:
  Fn fn_;
};

struct TreeParams {
  std::size_t max_depth = 6;
  std::size_t min_leaf = 1;
};

struct TreeNode {
  // Split nodes: row[feature] <= threshold goes left. Leaves: feature < 0.
  int feature = -1;
  double threshold = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  std::vector<double> probs;  // leaves only

  bool is_leaf() const { return feature < 0; }
};

class TreeModel : public Predictor {
 public:
  TreeModel(std::vector<std::string> feature_names, std::vector<ClassLabel> classes, TreeParams params,
            std::vector<TreeNode> nodes);

  using Predictor::predict_proba;
  void predict_proba(std::span<const double> row, std::span<double> out) const override;
  const std::vector<double>& leaf_for(std::span<const double> row) const;
  // One descent per (x, r): splits where x and r disagree fork on the feature's
  // bit, and each reached leaf is credited to its consistent subsets.
  void accumulate_subset_values(std::span<const double> x, std::span<const double> r, double weight,
                                std::span<double> v) const override;

  const TreeParams& params() const { return params_; }
  const std::vector<TreeNode>& nodes() const { return nodes_; }
  std::size_t depth() const;
  // Feature indices tested by at least one split.
  std::vector<int> used_features() const;

 private:
  TreeParams params_;
  std::vector<TreeNode> nodes_;
};

// Greedy Gini CART. `allowed_features` restricts candidate splits (empty =
// all). Sample multiplicities come from `rows` (bootstrap may repeat rows).
TreeModel train_tree(const FeatureMatrix& m, const TreeParams& params);
TreeModel train_tree(const FeatureMatrix& m, const TreeParams& params, std::span<const std::size_t> rows,
                     std::span<const std::size_t> allowed_features);

struct ForestParams {
  std::size_t n_trees = 25;
  TreeParams tree;
  double feature_fraction = 1.0;  // share of features each tree may split on
  bool bootstrap = true;
};

class ForestModel : public Predictor {
 public:
  ForestModel(std::vector<std::string> feature_names, std::vector<ClassLabel> classes, ForestParams params,
              std::vector<TreeModel> trees, std::vector<std::uint64_t> tree_seeds);

  // Arithmetic mean of member probability vectors.
  using Predictor::predict_proba;
  void predict_proba(std::span<const double> row, std::span<double> out) const override;
  void accumulate_subset_values(std::span<const double> x, std::span<const double> r, double weight,
                                std::span<double> v) const override;

  const ForestParams& params() const { return params_; }
  const std::vector<TreeModel>& trees() const { return trees_; }
  const std::vector<std::uint64_t>& tree_seeds() const { return tree_seeds_; }

 private:
  ForestParams params_;
  std::vector<TreeModel> trees_;
  std::vector<std::uint64_t> tree_seeds_;
};

ForestModel train_forest(const FeatureMatrix& m, const ForestParams& params, std::uint64_t seed);

// Self-describing JSON: family, hyperparameters, feature names, classes, nodes.
std::string model_to_json(const Predictor& p);
std::shared_ptr<Predictor> model_from_json(std::string_view text);

enum class ModelFamily { Tree, Forest };

struct CandidateSpec {
  ModelFamily family = ModelFamily::Tree;
  TreeParams tree;
  std::size_t n_trees = 1;
  double feature_fraction = 1.0;
  bool bootstrap = true;

  std::string describe() const;
};

// Depths {3, 6, 10} x {single tree, 25-tree forest, 100-tree forest}.
std::vector<CandidateSpec> default_candidates();

std::shared_ptr<Predictor> train_candidate(const FeatureMatrix& m, const CandidateSpec& c, std::uint64_t seed);

struct PerLabelMetrics {
  ClassLabel label;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

struct EvalMetrics {
  double accuracy = 0.0;
  std::optional<double> auc;  // absent when no label has both positives and negatives
  double kappa = 0.0;
  std::vector<PerLabelMetrics> per_label;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]
  std::size_t n = 0;
};

EvalMetrics evaluate(const Predictor& p, const FeatureMatrix& test);
std::string eval_metrics_to_json(const EvalMetrics& m);
EvalMetrics eval_metrics_from_json(std::string_view text);

// Mann-Whitney AUC of `scores` for the rows where `positive` is true; tied
// scores count one half.
std::optional<double> rank_auc(std::span<const double> scores, const std::vector<bool>& positive);

struct SelectionResult {
  std::shared_ptr<Predictor> winner;
  std::size_t winner_index = 0;
  std::vector<CandidateSpec> candidates;
  std::vector<double> cv_accuracy;  // mean validation accuracy per candidate
  std::optional<EvalMetrics> test_metrics;
  // Oversampled rows that reached any validation matrix. Always 0.
  std::size_t synthetic_rows_in_validation = 0;
  std::size_t synthetic_rows_in_final_training = 0;
};

struct SelectionOptions {
  std::size_t smote_k = 5;
  std::size_t jobs = 1;
};

// Subject-grouped CV with SMOTE inside each training fold only; winner is
// retrained on the oversampled full training matrix.
SelectionResult select_best_model(const FeatureMatrix& train, const std::vector<CandidateSpec>& candidates,
                                  const std::vector<Fold>& folds, std::uint64_t seed,
                                  const SelectionOptions& options = {});

// Mean accuracy drop when one column is shuffled, per feature.
ImportanceVector permutation_importance(const Predictor& p, const FeatureMatrix& m, std::size_t n_repeats,
                                        std::uint64_t seed);
// The shuffle applied for (feature, repeat); exposed so callers can audit it.
std::vector<std::size_t> importance_permutation(std::uint64_t seed, std::size_t feature, std::size_t repeat,
                                                std::size_t n_rows);

}  // namespace xstab
