#include "xstab/models.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include <fmt/format.h>

#include "json.hpp"
#include "xstab/common.hpp"
#include "xstab/error.hpp"

namespace xstab {

using nlohmann::json;

std::vector<double> Predictor::predict_proba(std::span<const double> row) const {
  std::vector<double> out(n_classes());
  predict_proba(row, out);
  return out;
}

std::size_t Predictor::predict_index(std::span<const double> row) const {
  thread_local std::vector<double> buf;
  buf.assign(n_classes(), 0.0);
  predict_proba(row, buf);
  std::size_t best = 0;
  for (std::size_t k = 1; k < buf.size(); ++k) {
    if (buf[k] > buf[best]) best = k;
  }
  return best;
}

void Predictor::accumulate_subset_values(std::span<const double> x, std::span<const double> r, double weight,
                                         std::span<double> v) const {
  const std::size_t n = x.size();
  const std::size_t k = n_classes();
  std::vector<double> composite(n), buf(k);
  for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
    for (std::size_t j = 0; j < n; ++j) composite[j] = (mask >> j) & 1 ? x[j] : r[j];
    predict_proba(composite, buf);
    for (std::size_t c = 0; c < k; ++c) v[mask * k + c] += weight * buf[c];
  }
}

std::shared_ptr<FunctionPredictor> FunctionPredictor::binary(std::vector<std::string> feature_names,
                                                             std::function<double(std::span<const double>)> positive) {
  return std::make_shared<FunctionPredictor>(
      std::move(feature_names), std::vector<ClassLabel>{ClassLabel::NC, ClassLabel::AD},
      [positive = std::move(positive)](std::span<const double> row, std::span<double> out) {
        const double p = positive(row);
        out[0] = 1.0 - p;
        out[1] = p;
      });
}

// ---------------------------------------------------------------------------
// Decision tree

TreeModel::TreeModel(std::vector<std::string> feature_names, std::vector<ClassLabel> classes, TreeParams params,
                     std::vector<TreeNode> nodes)
    : Predictor(std::move(feature_names), std::move(classes)), params_(params), nodes_(std::move(nodes)) {
  if (nodes_.empty()) throw ModelError("tree has no nodes");
}

const std::vector<double>& TreeModel::leaf_for(std::span<const double> row) const {
  std::size_t i = 0;
  while (!nodes_[i].is_leaf()) {
    const auto& n = nodes_[i];
    i = static_cast<std::size_t>(row[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
  }
  return nodes_[i].probs;
}

void TreeModel::predict_proba(std::span<const double> row, std::span<double> out) const {
  const auto& probs = leaf_for(row);
  std::copy(probs.begin(), probs.end(), out.begin());
}

void TreeModel::accumulate_subset_values(std::span<const double> x, std::span<const double> r, double weight,
                                         std::span<double> v) const {
  const std::size_t k = n_classes();
  const std::size_t full = (std::size_t{1} << x.size()) - 1;
  // (node, bits forced to x, bits forced to r)
  struct Frame {
    std::size_t node, ones, zeros;
  };
  std::vector<Frame> stack{{0, 0, 0}};
  while (!stack.empty()) {
    const Frame f = stack.back();
    stack.pop_back();
    const auto& node = nodes_[f.node];
    if (node.is_leaf()) {
      const std::size_t free = full & ~(f.ones | f.zeros);
      for (std::size_t sub = free;; sub = (sub - 1) & free) {
        double* out = &v[(f.ones | sub) * k];
        for (std::size_t c = 0; c < k; ++c) out[c] += weight * node.probs[c];
        if (sub == 0) break;
      }
      continue;
    }
    const auto j = static_cast<std::size_t>(node.feature);
    const std::size_t bit = std::size_t{1} << j;
    const auto x_next = static_cast<std::size_t>(x[j] <= node.threshold ? node.left : node.right);
    const auto r_next = static_cast<std::size_t>(r[j] <= node.threshold ? node.left : node.right);
    if (f.ones & bit) {
      stack.push_back({x_next, f.ones, f.zeros});
    } else if ((f.zeros & bit) || x_next == r_next) {
      stack.push_back({r_next, f.ones, f.zeros});
    } else {
      stack.push_back({x_next, f.ones | bit, f.zeros});
      stack.push_back({r_next, f.ones, f.zeros | bit});
    }
  }
}

std::size_t TreeModel::depth() const {
  std::vector<std::pair<std::size_t, std::size_t>> stack{{0, 0}};
  std::size_t best = 0;
  while (!stack.empty()) {
    auto [i, d] = stack.back();
    stack.pop_back();
    best = std::max(best, d);
    if (!nodes_[i].is_leaf()) {
      stack.emplace_back(static_cast<std::size_t>(nodes_[i].left), d + 1);
      stack.emplace_back(static_cast<std::size_t>(nodes_[i].right), d + 1);
    }
  }
  return best;
}

std::vector<int> TreeModel::used_features() const {
  std::set<int> used;
  for (const auto& n : nodes_) {
    if (!n.is_leaf()) used.insert(n.feature);
  }
  return {used.begin(), used.end()};
}

namespace {

class TreeBuilder {
 public:
  TreeBuilder(const FeatureMatrix& m, const TreeParams& params, std::span<const std::size_t> features)
      : m_(m), params_(params), features_(features.begin(), features.end()), k_(m.classes.size()) {
    for (std::size_t c = 0; c < k_; ++c) class_of_[static_cast<std::size_t>(m.classes[c])] = static_cast<int>(c);
  }

  std::vector<TreeNode> build(std::vector<std::size_t> rows) {
    grow(std::move(rows), 0);
    return std::move(nodes_);
  }

 private:
  int cls(std::size_t row) const {
    const int c = class_of_[static_cast<std::size_t>(m_.labels[row])];
    if (c < 0) throw ModelError("training label is not among the matrix classes");
    return c;
  }

  static double sum_sq(const std::vector<double>& counts) {
    double s = 0.0;
    for (double c : counts) s += c * c;
    return s;
  }

  std::int32_t grow(std::vector<std::size_t> rows, std::size_t depth) {
    const auto index = static_cast<std::int32_t>(nodes_.size());
    nodes_.emplace_back();
    const double n = static_cast<double>(rows.size());
    std::vector<double> counts(k_, 0.0);
    for (std::size_t r : rows) counts[static_cast<std::size_t>(cls(r))] += 1.0;

    const bool pure = std::count_if(counts.begin(), counts.end(), [](double c) { return c > 0; }) <= 1;
    if (pure || depth >= params_.max_depth || rows.size() < 2 * params_.min_leaf) {
      make_leaf(index, counts, n);
      return index;
    }

    // Weighted Gini of the parent: n - sum(c^2)/n. Children are scored the same way.
    const double parent = n - sum_sq(counts) / n;
    double best_score = parent - 1e-12;
    int best_feature = -1;
    double best_threshold = 0.0;

    std::vector<std::pair<double, int>> sorted(rows.size());
    std::vector<double> left(k_), right(k_);
    for (std::size_t f : features_) {
      for (std::size_t i = 0; i < rows.size(); ++i) sorted[i] = {m_.at(rows[i], f), cls(rows[i])};
      std::sort(sorted.begin(), sorted.end());
      if (sorted.front().first == sorted.back().first) continue;
      std::fill(left.begin(), left.end(), 0.0);
      right = counts;
      double left_sq = 0.0, right_sq = sum_sq(counts);
      for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
        const auto c = static_cast<std::size_t>(sorted[i].second);
        left_sq += 2.0 * left[c] + 1.0;
        right_sq -= 2.0 * right[c] - 1.0;
        left[c] += 1.0;
        right[c] -= 1.0;
        if (sorted[i].first == sorted[i + 1].first) continue;
        const double nl = static_cast<double>(i + 1);
        const double nr = n - nl;
        if (nl < static_cast<double>(params_.min_leaf) || nr < static_cast<double>(params_.min_leaf)) continue;
        const double score = (nl - left_sq / nl) + (nr - right_sq / nr);
        if (score < best_score) {
          best_score = score;
          best_feature = static_cast<int>(f);
          const double lo = sorted[i].first, hi = sorted[i + 1].first;
          double mid = lo + 0.5 * (hi - lo);
          if (!(mid >= lo && mid < hi)) mid = lo;
          best_threshold = mid;
        }
      }
    }
    if (best_feature < 0) {
      make_leaf(index, counts, n);
      return index;
    }

    std::vector<std::size_t> lrows, rrows;
    for (std::size_t r : rows) {
      (m_.at(r, static_cast<std::size_t>(best_feature)) <= best_threshold ? lrows : rrows).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();
    nodes_[static_cast<std::size_t>(index)].feature = best_feature;
    nodes_[static_cast<std::size_t>(index)].threshold = best_threshold;
    const std::int32_t l = grow(std::move(lrows), depth + 1);
    const std::int32_t r = grow(std::move(rrows), depth + 1);
    nodes_[static_cast<std::size_t>(index)].left = l;
    nodes_[static_cast<std::size_t>(index)].right = r;
    return index;
  }

  void make_leaf(std::int32_t index, const std::vector<double>& counts, double n) {
    auto& node = nodes_[static_cast<std::size_t>(index)];
    node.probs.resize(k_);
    for (std::size_t c = 0; c < k_; ++c) node.probs[c] = counts[c] / n;
  }

  const FeatureMatrix& m_;
  TreeParams params_;
  std::vector<std::size_t> features_;
  std::size_t k_;
  int class_of_[3] = {-1, -1, -1};
  std::vector<TreeNode> nodes_;
};

std::vector<std::size_t> iota_vec(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

}  // namespace

TreeModel train_tree(const FeatureMatrix& m, const TreeParams& params) {
  const auto rows = iota_vec(m.n_rows());
  const auto features = iota_vec(m.n_features());
  return train_tree(m, params, rows, features);
}

TreeModel train_tree(const FeatureMatrix& m, const TreeParams& params, std::span<const std::size_t> rows,
                     std::span<const std::size_t> allowed_features) {
  if (rows.empty()) throw ModelError("cannot train a tree on zero rows");
  if (params.min_leaf == 0) throw ModelError("min_leaf must be at least 1");
  if (m.classes.empty()) throw ModelError("feature matrix declares no classes");
  std::vector<std::size_t> features(allowed_features.begin(), allowed_features.end());
  if (features.empty()) features = iota_vec(m.n_features());
  TreeBuilder builder(m, params, features);
  auto nodes = builder.build(std::vector<std::size_t>(rows.begin(), rows.end()));
  return TreeModel(m.feature_names, m.classes, params, std::move(nodes));
}

// ---------------------------------------------------------------------------
// Forest

ForestModel::ForestModel(std::vector<std::string> feature_names, std::vector<ClassLabel> classes, ForestParams params,
                         std::vector<TreeModel> trees, std::vector<std::uint64_t> tree_seeds)
    : Predictor(std::move(feature_names), std::move(classes)),
      params_(params),
      trees_(std::move(trees)),
      tree_seeds_(std::move(tree_seeds)) {
  if (trees_.empty()) throw ModelError("forest has no trees");
}

void ForestModel::predict_proba(std::span<const double> row, std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
  for (const auto& t : trees_) {
    const auto& probs = t.leaf_for(row);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += probs[k];
  }
  const double inv = 1.0 / static_cast<double>(trees_.size());
  for (double& v : out) v *= inv;
}

void ForestModel::accumulate_subset_values(std::span<const double> x, std::span<const double> r, double weight,
                                           std::span<double> v) const {
  const double w = weight / static_cast<double>(trees_.size());
  for (const auto& t : trees_) t.accumulate_subset_values(x, r, w, v);
}

ForestModel train_forest(const FeatureMatrix& m, const ForestParams& params, std::uint64_t seed) {
  if (params.n_trees == 0) throw ModelError("a forest needs at least one tree");
  if (!(params.feature_fraction > 0.0 && params.feature_fraction <= 1.0)) {
    throw ModelError("feature_fraction must lie in (0, 1]");
  }
  const std::size_t n = m.n_rows();
  const std::size_t p = m.n_features();
  const std::size_t n_sub =
      params.feature_fraction >= 1.0
          ? p
          : std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(params.feature_fraction * static_cast<double>(p))));

  std::vector<TreeModel> trees;
  std::vector<std::uint64_t> seeds;
  trees.reserve(params.n_trees);
  for (std::size_t t = 0; t < params.n_trees; ++t) {
    const std::uint64_t tree_seed = derive_seed(seed, {t});
    Rng rng(tree_seed);
    std::vector<std::size_t> rows;
    if (params.bootstrap) {
      rows.resize(n);
      for (auto& r : rows) r = rng.index(n);
    } else {
      rows = iota_vec(n);
    }
    std::vector<std::size_t> features = iota_vec(p);
    if (n_sub < p) {
      rng.shuffle(features);
      features.resize(n_sub);
      std::sort(features.begin(), features.end());
    }
    trees.push_back(train_tree(m, params.tree, rows, features));
    seeds.push_back(tree_seed);
  }
  return ForestModel(m.feature_names, m.classes, params, std::move(trees), std::move(seeds));
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

json tree_nodes_to_json(const TreeModel& t) {
  json nodes = json::array();
  for (const auto& n : t.nodes()) {
    if (n.is_leaf()) {
      nodes.push_back({{"leaf", n.probs}});
    } else {
      nodes.push_back({{"feature", n.feature}, {"threshold", n.threshold}, {"left", n.left}, {"right", n.right}});
    }
  }
  return nodes;
}

std::vector<TreeNode> tree_nodes_from_json(const json& j, std::size_t n_features, std::size_t n_classes) {
  std::vector<TreeNode> nodes;
  for (const auto& jn : j) {
    TreeNode n;
    if (jn.contains("leaf")) {
      n.probs = jn.at("leaf").get<std::vector<double>>();
      if (n.probs.size() != n_classes) throw ParseError("model: leaf probability vector has wrong length");
    } else {
      n.feature = jn.at("feature").get<int>();
      n.threshold = jn.at("threshold").get<double>();
      n.left = jn.at("left").get<std::int32_t>();
      n.right = jn.at("right").get<std::int32_t>();
      if (n.feature < 0 || static_cast<std::size_t>(n.feature) >= n_features) {
        throw ParseError("model: split feature index out of range");
      }
    }
    nodes.push_back(std::move(n));
  }
  for (const auto& n : nodes) {
    if (n.is_leaf()) continue;
    const auto size = static_cast<std::int32_t>(nodes.size());
    if (n.left <= 0 || n.right <= 0 || n.left >= size || n.right >= size) {
      throw ParseError("model: child index out of range");
    }
  }
  return nodes;
}

json tree_params_json(const TreeParams& p) { return {{"max_depth", p.max_depth}, {"min_leaf", p.min_leaf}}; }

TreeParams tree_params_from(const json& j) {
  return TreeParams{j.at("max_depth").get<std::size_t>(), j.at("min_leaf").get<std::size_t>()};
}

}  // namespace

std::string model_to_json(const Predictor& p) {
  json j;
  j["feature_names"] = p.feature_names();
  std::vector<std::string> classes;
  for (ClassLabel c : p.classes()) classes.emplace_back(to_string(c));
  j["classes"] = classes;
  if (const auto* t = dynamic_cast<const TreeModel*>(&p)) {
    j["family"] = "tree";
    j["params"] = tree_params_json(t->params());
    j["trees"] = json::array({json{{"nodes", tree_nodes_to_json(*t)}}});
  } else if (const auto* f = dynamic_cast<const ForestModel*>(&p)) {
    j["family"] = "forest";
    const auto& fp = f->params();
    j["params"] = tree_params_json(fp.tree);
    j["params"]["n_trees"] = fp.n_trees;
    j["params"]["feature_fraction"] = fp.feature_fraction;
    j["params"]["bootstrap"] = fp.bootstrap;
    j["tree_seeds"] = f->tree_seeds();
    json trees = json::array();
    for (const auto& t : f->trees()) trees.push_back({{"nodes", tree_nodes_to_json(t)}});
    j["trees"] = std::move(trees);
  } else {
    throw ModelError("only tree and forest models can be serialized");
  }
  return j.dump(1) + "\n";
}

std::shared_ptr<Predictor> model_from_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    auto names = j.at("feature_names").get<std::vector<std::string>>();
    std::vector<ClassLabel> classes;
    for (const auto& c : j.at("classes")) classes.push_back(parse_label(c.get<std::string>()));
    const std::string family = j.at("family").get<std::string>();
    const TreeParams tp = tree_params_from(j.at("params"));
    const auto& jtrees = j.at("trees");
    if (jtrees.empty()) throw ParseError("model: no trees");
    if (family == "tree") {
      auto nodes = tree_nodes_from_json(jtrees.at(0).at("nodes"), names.size(), classes.size());
      return std::make_shared<TreeModel>(names, classes, tp, std::move(nodes));
    }
    if (family == "forest") {
      ForestParams fp;
      fp.tree = tp;
      fp.n_trees = j.at("params").at("n_trees").get<std::size_t>();
      fp.feature_fraction = j.at("params").at("feature_fraction").get<double>();
      fp.bootstrap = j.at("params").at("bootstrap").get<bool>();
      std::vector<TreeModel> trees;
      for (const auto& jt : jtrees) {
        trees.emplace_back(names, classes, tp, tree_nodes_from_json(jt.at("nodes"), names.size(), classes.size()));
      }
      auto seeds = j.value("tree_seeds", std::vector<std::uint64_t>{});
      return std::make_shared<ForestModel>(names, classes, fp, std::move(trees), std::move(seeds));
    }
    throw ParseError(fmt::format("model: unknown family '{}'", family));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("model: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Candidates and selection

std::string CandidateSpec::describe() const {
  if (family == ModelFamily::Tree) {
    return fmt::format("tree(depth={},min_leaf={})", tree.max_depth, tree.min_leaf);
  }
  return fmt::format("forest(trees={},depth={},min_leaf={},features={},bootstrap={})", n_trees, tree.max_depth,
                     tree.min_leaf, format_double(feature_fraction), bootstrap);
}

std::vector<CandidateSpec> default_candidates() {
  std::vector<CandidateSpec> out;
  for (std::size_t depth : {3, 6, 10}) {
    out.push_back(CandidateSpec{ModelFamily::Tree, {depth, 2}, 1, 1.0, false});
    out.push_back(CandidateSpec{ModelFamily::Forest, {depth, 2}, 25, 0.5, true});
    out.push_back(CandidateSpec{ModelFamily::Forest, {depth, 2}, 100, 0.5, true});
  }
  return out;
}

std::shared_ptr<Predictor> train_candidate(const FeatureMatrix& m, const CandidateSpec& c, std::uint64_t seed) {
  if (c.family == ModelFamily::Tree) return std::make_shared<TreeModel>(train_tree(m, c.tree));
  ForestParams fp{c.n_trees, c.tree, c.feature_fraction, c.bootstrap};
  return std::make_shared<ForestModel>(train_forest(m, fp, seed));
}

namespace {

double accuracy_of(const Predictor& p, const FeatureMatrix& m) {
  if (m.n_rows() == 0) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < m.n_rows(); ++i) {
    if (p.classes()[p.predict_index(m.row(i))] == m.labels[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(m.n_rows());
}

// SMOTE is skipped when a label is too small to interpolate from.
FeatureMatrix balance_if_possible(const FeatureMatrix& m, std::size_t k, std::uint64_t seed) {
  std::map<ClassLabel, std::size_t> counts;
  for (ClassLabel l : m.labels) ++counts[l];
  if (counts.size() < 2) return m;
  for (const auto& [label, c] : counts) {
    if (c < 2) return m;
  }
  return smote_oversample(m, k, seed);
}

}  // namespace

SelectionResult select_best_model(const FeatureMatrix& train, const std::vector<CandidateSpec>& candidates,
                                  const std::vector<Fold>& folds, std::uint64_t seed, const SelectionOptions& options) {
  if (candidates.empty()) throw ModelError("model selection needs at least one candidate");
  if (folds.empty()) throw ModelError("model selection needs at least one fold");
  if (train.n_rows() == 0) throw ModelError("model selection needs training rows");

  SelectionResult result;
  result.candidates = candidates;

  std::vector<FeatureMatrix> fold_train(folds.size()), fold_valid(folds.size());
  for (std::size_t f = 0; f < folds.size(); ++f) {
    const std::set<std::string> tr(folds[f].train_subjects.begin(), folds[f].train_subjects.end());
    const std::set<std::string> va(folds[f].validation_subjects.begin(), folds[f].validation_subjects.end());
    FeatureMatrix valid = train.select_subjects(va);
    result.synthetic_rows_in_validation += valid.synthetic_count();
    fold_valid[f] = std::move(valid);
    FeatureMatrix real = train.select_subjects(tr);
    if (real.n_rows() == 0) throw ModelError(fmt::format("fold {} has no training rows", f));
    fold_train[f] = balance_if_possible(real, options.smote_k, derive_seed(seed, {f, 0x736d6f7465}));
  }

  const std::size_t n_jobs = candidates.size() * folds.size();
  std::vector<double> scores(n_jobs, 0.0);
  parallel_for(n_jobs, options.jobs, [&](std::size_t job) {
    const std::size_t c = job / folds.size();
    const std::size_t f = job % folds.size();
    auto model = train_candidate(fold_train[f], candidates[c], derive_seed(seed, {c, f}));
    scores[job] = accuracy_of(*model, fold_valid[f]);
  });

  result.cv_accuracy.assign(candidates.size(), 0.0);
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    double s = 0.0;
    for (std::size_t f = 0; f < folds.size(); ++f) s += scores[c * folds.size() + f];
    result.cv_accuracy[c] = s / static_cast<double>(folds.size());
    if (result.cv_accuracy[c] > result.cv_accuracy[result.winner_index]) result.winner_index = c;
  }

  const FeatureMatrix full = balance_if_possible(train, options.smote_k, derive_seed(seed, {0x66696e616c}));
  result.synthetic_rows_in_final_training = full.synthetic_count();
  result.winner = train_candidate(full, candidates[result.winner_index],
                                  derive_seed(seed, {result.winner_index, 0x66696e616c}));
  return result;
}

// ---------------------------------------------------------------------------
// Permutation importance

std::vector<std::size_t> importance_permutation(std::uint64_t seed, std::size_t feature, std::size_t repeat,
                                                std::size_t n_rows) {
  Rng rng(derive_seed(seed, {feature, repeat}));
  return rng.permutation(n_rows);
}

ImportanceVector permutation_importance(const Predictor& p, const FeatureMatrix& m, std::size_t n_repeats,
                                        std::uint64_t seed) {
  if (m.n_rows() == 0) throw EvalError("permutation importance needs a non-empty matrix");
  if (n_repeats == 0) throw EvalError("permutation importance needs n_repeats >= 1");
  const std::size_t n = m.n_rows();
  const std::size_t width = m.n_features();
  const double baseline = accuracy_of(p, m);

  ImportanceVector out;
  out.feature_names = m.feature_names;
  out.scores.assign(width, 0.0);
  out.source = ImportanceSource::FI;
  std::vector<double> row(width);
  for (std::size_t f = 0; f < width; ++f) {
    double drop = 0.0;
    for (std::size_t r = 0; r < n_repeats; ++r) {
      const auto perm = importance_permutation(seed, f, r, n);
      std::size_t hits = 0;
      for (std::size_t i = 0; i < n; ++i) {
        auto src = m.row(i);
        std::copy(src.begin(), src.end(), row.begin());
        row[f] = m.at(perm[i], f);
        if (p.classes()[p.predict_index(row)] == m.labels[i]) ++hits;
      }
      drop += baseline - static_cast<double>(hits) / static_cast<double>(n);
    }
    out.scores[f] = drop / static_cast<double>(n_repeats);
  }
  return out;
}

}  // namespace xstab
