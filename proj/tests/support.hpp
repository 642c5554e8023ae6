#pragma once

// Shared fixtures and brute-force oracles. The oracles deliberately use the
// textbook definitions (explicit pair counts, factorial weights) rather than
// the library's formulations.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "xstab/importance.hpp"
#include "xstab/models.hpp"
#include "xstab/preprocess.hpp"
#include "xstab/shap.hpp"

namespace xstab::testing {

inline std::vector<std::string> names(std::size_t n, const std::string& prefix = "f") {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(prefix + std::to_string(i + 1));
  return out;
}

inline FeatureMatrix make_matrix(std::vector<std::string> features, const std::vector<std::vector<double>>& rows,
                                 const std::vector<ClassLabel>& labels, std::vector<ClassLabel> classes = {}) {
  FeatureMatrix m;
  m.feature_names = std::move(features);
  for (const auto& r : rows) m.values.insert(m.values.end(), r.begin(), r.end());
  m.labels = labels;
  for (std::size_t i = 0; i < rows.size(); ++i) m.subject_ids.push_back("S" + std::to_string(i));
  m.synthetic.assign(rows.size(), 0);
  if (classes.empty()) {
    std::set<ClassLabel> seen(labels.begin(), labels.end());
    classes.assign(seen.begin(), seen.end());
  }
  m.classes = std::move(classes);
  return m;
}

inline ImportanceVector vec(const std::vector<double>& scores, ImportanceSource src = ImportanceSource::MeanAbsShap,
                            std::vector<std::string> feature_names = {}) {
  ImportanceVector v;
  v.feature_names = feature_names.empty() ? names(scores.size()) : std::move(feature_names);
  v.scores = scores;
  v.source = src;
  return v;
}

inline BackgroundSet background(std::vector<std::string> features, const std::vector<std::vector<double>>& rows) {
  BackgroundSet bg;
  bg.feature_names = std::move(features);
  for (const auto& r : rows) bg.rows.insert(bg.rows.end(), r.begin(), r.end());
  return bg;
}

// ---- Rank oracles ----------------------------------------------------------

// rank_i = 1 + #{j: s_j > s_i} + (#{j != i: s_j == s_i}) / 2  (descending, average ties)
inline std::vector<double> oracle_ranks(const std::vector<double>& s) {
  std::vector<double> r(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    double greater = 0, equal = 0;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (j == i) continue;
      if (s[j] > s[i]) greater += 1;
      if (s[j] == s[i]) equal += 1;
    }
    r[i] = 1 + greater + equal / 2;
  }
  return r;
}

inline std::optional<double> oracle_spearman(const std::vector<double>& a, const std::vector<double>& b) {
  const auto ra = oracle_ranks(a), rb = oracle_ranks(b);
  const double n = static_cast<double>(a.size());
  if (a.size() < 2) return std::nullopt;
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += ra[i] / n;
    mb += rb[i] / n;
  }
  double num = 0, da = 0, db = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (ra[i] - ma) * (rb[i] - mb);
    da += (ra[i] - ma) * (ra[i] - ma);
    db += (rb[i] - mb) * (rb[i] - mb);
  }
  if (da == 0 || db == 0) return std::nullopt;
  return num / std::sqrt(da * db);
}

// tau-b from explicit pair classification: (C - D) / sqrt((C + D + Ta)(C + D + Tb)),
// Ta / Tb = pairs tied only in a / only in b.
inline std::optional<double> oracle_kendall(const std::vector<double>& a, const std::vector<double>& b) {
  double C = 0, D = 0, Ta = 0, Tb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = i + 1; j < a.size(); ++j) {
      const bool tie_a = a[i] == a[j], tie_b = b[i] == b[j];
      if (tie_a && tie_b) continue;
      if (tie_a) {
        Ta += 1;
      } else if (tie_b) {
        Tb += 1;
      } else if ((a[i] > a[j]) == (b[i] > b[j])) {
        C += 1;
      } else {
        D += 1;
      }
    }
  }
  const double den = (C + D + Ta) * (C + D + Tb);
  if (den == 0) return std::nullopt;
  return (C - D) / std::sqrt(den);
}

// Top-k names by score desc, name asc.
inline std::set<std::string> oracle_topk(const ImportanceVector& v, std::size_t k) {
  std::vector<std::pair<double, std::string>> items;
  for (std::size_t i = 0; i < v.size(); ++i) items.push_back({-v.scores[i], v.feature_names[i]});
  std::sort(items.begin(), items.end());
  std::set<std::string> out;
  for (std::size_t i = 0; i < std::min(k, items.size()); ++i) out.insert(items[i].second);
  return out;
}

// ---- Shapley oracle ----------------------------------------------------------

inline double factorial(int n) { return n <= 1 ? 1.0 : n * factorial(n - 1); }

// phi_j = sum_{S subset of F\{j}} |S|!(n-|S|-1)!/n! (v(S u {j}) - v(S)),
// v(S) = mean over background rows of f(x on S, background elsewhere).
inline std::vector<double> oracle_shapley(const Predictor& p, const std::vector<double>& x, const BackgroundSet& bg,
                                          std::size_t target, double* base = nullptr) {
  const int n = static_cast<int>(x.size());
  auto value = [&](const std::vector<bool>& in) {
    double total = 0;
    for (std::size_t r = 0; r < bg.size(); ++r) {
      std::vector<double> z(bg.row(r).begin(), bg.row(r).end());
      for (int j = 0; j < n; ++j) {
        if (in[j]) z[j] = x[j];
      }
      total += p.predict_proba(z)[target];
    }
    return total / static_cast<double>(bg.size());
  };
  std::vector<double> phi(n, 0.0);
  for (int j = 0; j < n; ++j) {
    for (int mask = 0; mask < (1 << n); ++mask) {
      if (mask & (1 << j)) continue;
      std::vector<bool> in(n);
      int s = 0;
      for (int k = 0; k < n; ++k) {
        in[k] = mask & (1 << k);
        s += in[k];
      }
      const double w = factorial(s) * factorial(n - s - 1) / factorial(n);
      auto with = in;
      with[j] = true;
      phi[j] += w * (value(with) - value(in));
    }
  }
  if (base) *base = value(std::vector<bool>(n, false));
  return phi;
}

// ---- Evaluation oracle -----------------------------------------------------

// Pairwise AUC: P(score_pos > score_neg) + 0.5 P(equal).
inline std::optional<double> oracle_auc(const std::vector<double>& scores, const std::vector<bool>& positive) {
  double wins = 0, pairs = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (!positive[i] || positive[j]) continue;
      pairs += 1;
      wins += scores[i] > scores[j] ? 1.0 : (scores[i] == scores[j] ? 0.5 : 0.0);
    }
  }
  if (pairs == 0) return std::nullopt;
  return wins / pairs;
}

// Predictor returning fixed probability rows keyed by the first feature (row id).
inline std::shared_ptr<FunctionPredictor> table_predictor(const std::vector<std::vector<double>>& probs,
                                                          std::vector<ClassLabel> classes) {
  return std::make_shared<FunctionPredictor>(
      std::vector<std::string>{"id"}, std::move(classes), [probs](std::span<const double> row, std::span<double> out) {
        const auto& p = probs.at(static_cast<std::size_t>(row[0]));
        std::copy(p.begin(), p.end(), out.begin());
      });
}

}  // namespace xstab::testing
