#include "xstab/shap.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <set>

#include <fmt/format.h>

#include "json.hpp"
#include "xstab/common.hpp"
#include "xstab/error.hpp"

namespace xstab {

using nlohmann::json;

BackgroundSet background_from(const FeatureMatrix& m) {
  return BackgroundSet{m.feature_names, m.values};
}

BackgroundSet make_background(const FeatureMatrix& train, std::size_t max_rows, std::uint64_t seed) {
  std::vector<std::size_t> real;
  for (std::size_t i = 0; i < train.n_rows(); ++i) {
    if (!train.synthetic[i]) real.push_back(i);
  }
  if (real.empty() || max_rows == 0) throw Error("background set needs at least one real training row");
  if (real.size() > max_rows) {
    Rng rng(seed);
    rng.shuffle(real);
    real.resize(max_rows);
    std::sort(real.begin(), real.end());
  }
  BackgroundSet bg;
  bg.feature_names = train.feature_names;
  for (std::size_t r : real) {
    auto row = train.row(r);
    bg.rows.insert(bg.rows.end(), row.begin(), row.end());
  }
  return bg;
}

namespace {

// Shapley values for every class at once: phi[k * n + j].
struct AllClassResult {
  std::vector<double> phi;
  std::vector<double> base;
  std::vector<double> prediction;
  std::vector<double> residual;
  std::vector<double> std_error;
};

void check_background(const Predictor& p, const BackgroundSet& bg) {
  if (bg.size() == 0) throw Error("background set is empty");
  if (bg.feature_names != p.feature_names()) {
    throw FeatureMismatchError("background features differ from the predictor's features");
  }
}

std::vector<double> background_mean(const Predictor& p, const BackgroundSet& bg) {
  const std::size_t k = p.n_classes();
  std::vector<double> sum(k, 0.0), buf(k);
  for (std::size_t r = 0; r < bg.size(); ++r) {
    p.predict_proba(bg.row(r), buf);
    for (std::size_t c = 0; c < k; ++c) sum[c] += buf[c];
  }
  for (double& s : sum) s /= static_cast<double>(bg.size());
  return sum;
}

AllClassResult exact_core(const Predictor& p, std::span<const double> x, const BackgroundSet& bg) {
  check_background(p, bg);
  const std::size_t n = x.size();
  if (n != bg.n_features()) throw FeatureMismatchError("row width differs from the background width");
  if (n > kMaxExactFeatures) {
    throw EnumerationLimitError(fmt::format(
        "exact Shapley enumeration is limited to {} features (got {}); use the sampled estimator",
        kMaxExactFeatures, n));
  }
  const std::size_t k = p.n_classes();
  const std::size_t n_subsets = std::size_t{1} << n;
  const double inv_b = 1.0 / static_cast<double>(bg.size());

  // v[mask * k + c] = mean over background rows of f_c(x on mask, r elsewhere)
  std::vector<double> v(n_subsets * k, 0.0);
  for (std::size_t r = 0; r < bg.size(); ++r) p.accumulate_subset_values(x, bg.row(r), inv_b, v);

  // weight(s) = s! (n-s-1)! / n! = 1 / (n * C(n-1, s))
  std::vector<double> weight(n, 0.0);
  for (std::size_t s = 0; s < n; ++s) {
    double binom = 1.0;
    for (std::size_t t = 1; t <= s; ++t) binom = binom * static_cast<double>(n - 1 - s + t) / static_cast<double>(t);
    weight[s] = 1.0 / (static_cast<double>(n) * binom);
  }

  AllClassResult out;
  out.phi.assign(k * n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t bit = std::size_t{1} << j;
    for (std::size_t mask = 0; mask < n_subsets; ++mask) {
      if (mask & bit) continue;
      const double w = weight[static_cast<std::size_t>(std::popcount(mask))];
      for (std::size_t c = 0; c < k; ++c) out.phi[c * n + j] += w * (v[(mask | bit) * k + c] - v[mask * k + c]);
    }
  }
  out.base.assign(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k));
  out.prediction = p.predict_proba(x);
  out.residual.resize(k);
  for (std::size_t c = 0; c < k; ++c) {
    double s = out.base[c];
    for (std::size_t j = 0; j < n; ++j) s += out.phi[c * n + j];
    out.residual[c] = s - out.prediction[c];
  }
  return out;
}

AllClassResult sampled_core(const Predictor& p, std::span<const double> x, const BackgroundSet& bg,
                            const SampledOptions& opt, const std::vector<double>& base) {
  check_background(p, bg);
  if (opt.n_permutations == 0) throw Error("sampled Shapley needs at least one permutation");
  const std::size_t n = x.size();
  if (n != bg.n_features()) throw FeatureMismatchError("row width differs from the background width");
  const std::size_t k = p.n_classes();

  // Antithetic sampling: each drawn permutation is walked forward and then in
  // reverse against the same background row; the pair mean is one sample unit.
  std::vector<double> sum(k * n, 0.0), sum_sq(k * n, 0.0), unit(k * n);
  std::vector<double> composite(n), prev(k), cur(k);
  auto walk = [&](auto first, auto last, std::span<const double> r, double weight) {
    std::copy(r.begin(), r.end(), composite.begin());
    p.predict_proba(composite, prev);
    for (auto it = first; it != last; ++it) {
      const std::size_t j = *it;
      composite[j] = x[j];
      p.predict_proba(composite, cur);
      for (std::size_t c = 0; c < k; ++c) unit[c * n + j] += weight * (cur[c] - prev[c]);
      std::swap(prev, cur);
    }
  };
  Rng rng(opt.seed);
  const std::size_t units = (opt.n_permutations + 1) / 2;
  for (std::size_t u = 0; u < units; ++u) {
    const auto perm = rng.permutation(n);
    const auto r = bg.row(u % bg.size());
    std::fill(unit.begin(), unit.end(), 0.0);
    const bool paired = 2 * u + 1 < opt.n_permutations;
    walk(perm.begin(), perm.end(), r, paired ? 0.5 : 1.0);
    if (paired) walk(perm.rbegin(), perm.rend(), r, 0.5);
    for (std::size_t i = 0; i < k * n; ++i) {
      sum[i] += unit[i];
      sum_sq[i] += unit[i] * unit[i];
    }
  }

  AllClassResult out;
  const double m = static_cast<double>(units);
  out.phi.resize(k * n);
  out.std_error.resize(k * n);
  for (std::size_t i = 0; i < k * n; ++i) {
    out.phi[i] = sum[i] / m;
    if (units > 1) {
      const double var = std::max(0.0, (sum_sq[i] - m * out.phi[i] * out.phi[i]) / (m - 1.0));
      out.std_error[i] = std::sqrt(var / m);
    }
  }
  out.base = base;
  out.prediction = p.predict_proba(x);
  out.residual.resize(k);
  for (std::size_t c = 0; c < k; ++c) {
    double s = out.base[c];
    for (std::size_t j = 0; j < n; ++j) s += out.phi[c * n + j];
    out.residual[c] = s - out.prediction[c];
    if (!opt.correct_additivity || out.residual[c] == 0.0) continue;
    double total_abs = 0.0;
    for (std::size_t j = 0; j < n; ++j) total_abs += std::abs(out.phi[c * n + j]);
    // No sampled credit and a rounding-level gap (constant predictor): leave exact zeros.
    if (total_abs == 0.0 && std::abs(out.residual[c]) < 1e-12) continue;
    for (std::size_t j = 0; j < n; ++j) {
      const double share = total_abs > 0.0 ? std::abs(out.phi[c * n + j]) / total_abs : 1.0 / static_cast<double>(n);
      out.phi[c * n + j] -= out.residual[c] * share;
    }
  }
  return out;
}

ShapleyResult pick(const AllClassResult& all, std::size_t target, std::size_t n) {
  ShapleyResult r;
  r.phi.assign(all.phi.begin() + static_cast<std::ptrdiff_t>(target * n),
               all.phi.begin() + static_cast<std::ptrdiff_t>((target + 1) * n));
  if (!all.std_error.empty()) {
    r.std_error.assign(all.std_error.begin() + static_cast<std::ptrdiff_t>(target * n),
                       all.std_error.begin() + static_cast<std::ptrdiff_t>((target + 1) * n));
  }
  r.base = all.base[target];
  r.prediction = all.prediction[target];
  r.residual = all.residual[target];
  return r;
}

void check_target(const Predictor& p, std::size_t target) {
  if (target >= p.n_classes()) throw Error(fmt::format("target index {} out of range", target));
}

void check_features(const Predictor& p, const FeatureMatrix& m) {
  if (p.feature_names() == m.feature_names) return;
  const std::set<std::string> a(p.feature_names().begin(), p.feature_names().end());
  const std::set<std::string> b(m.feature_names.begin(), m.feature_names.end());
  std::vector<std::string> diff;
  std::set_symmetric_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(diff));
  if (diff.empty()) throw FeatureMismatchError("matrix features are in a different order than the model's");
  std::string list;
  for (const auto& d : diff) list += (list.empty() ? "" : ", ") + d;
  throw FeatureMismatchError("matrix and model features differ: " + list);
}

std::vector<AttributionMatrix> explain_targets(const Predictor& p, const FeatureMatrix& m, const BackgroundSet& bg,
                                               const ShapMethod& method, const std::vector<std::size_t>& targets,
                                               std::size_t jobs) {
  check_features(p, m);
  check_background(p, bg);
  const std::size_t n = m.n_features();
  const std::size_t rows = m.n_rows();
  const std::vector<double> base = background_mean(p, bg);

  std::vector<AttributionMatrix> out(targets.size());
  for (std::size_t t = 0; t < targets.size(); ++t) {
    out[t].feature_names = m.feature_names;
    out[t].base_value = base[targets[t]];
    out[t].target = p.classes()[targets[t]];
    out[t].method = method.describe();
    out[t].values.assign(rows * n, 0.0);
  }
  parallel_for(rows, jobs, [&](std::size_t i) {
    AllClassResult r;
    if (method.kind == ShapMethod::Kind::Exact) {
      r = exact_core(p, m.row(i), bg);
    } else {
      SampledOptions opt = method.sampled;
      opt.seed = derive_seed(method.sampled.seed, {i});
      r = sampled_core(p, m.row(i), bg, opt, base);
    }
    for (std::size_t t = 0; t < targets.size(); ++t) {
      std::copy_n(r.phi.begin() + static_cast<std::ptrdiff_t>(targets[t] * n), n,
                  out[t].values.begin() + static_cast<std::ptrdiff_t>(i * n));
    }
  });
  return out;
}

}  // namespace

ShapleyResult exact_shapley(const Predictor& p, std::span<const double> x, const BackgroundSet& bg,
                            std::size_t target) {
  check_target(p, target);
  return pick(exact_core(p, x, bg), target, x.size());
}

ShapleyResult sampled_shapley(const Predictor& p, std::span<const double> x, const BackgroundSet& bg,
                              std::size_t target, const SampledOptions& options) {
  check_target(p, target);
  check_background(p, bg);
  return pick(sampled_core(p, x, bg, options, background_mean(p, bg)), target, x.size());
}

std::string ShapMethod::describe() const {
  if (kind == Kind::Exact) return "exact";
  return fmt::format("sampled(permutations={},seed={},corrected={})", sampled.n_permutations, sampled.seed,
                     sampled.correct_additivity);
}

AttributionMatrix explain_dataset(const Predictor& p, const FeatureMatrix& m, const BackgroundSet& bg,
                                  const ShapMethod& method, std::size_t target_index, std::size_t jobs) {
  check_target(p, target_index);
  return std::move(explain_targets(p, m, bg, method, {target_index}, jobs).front());
}

std::vector<AttributionMatrix> explain_default_targets(const Predictor& p, const FeatureMatrix& m,
                                                       const BackgroundSet& bg, const ShapMethod& method,
                                                       std::size_t jobs) {
  std::vector<std::size_t> targets;
  if (p.n_classes() == 2) {
    targets.push_back(1);
  } else {
    for (std::size_t c = 0; c < p.n_classes(); ++c) targets.push_back(c);
  }
  return explain_targets(p, m, bg, method, targets, jobs);
}

ImportanceVector summarize(const AttributionMatrix& a) {
  const std::size_t n = a.n_features();
  const std::size_t rows = a.n_samples();
  if (rows == 0) throw Error("cannot summarize an empty attribution matrix");
  ImportanceVector v;
  v.feature_names = a.feature_names;
  v.source = ImportanceSource::MeanAbsShap;
  v.scores.assign(n, 0.0);
  std::vector<double> signed_means(n, 0.0);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      v.scores[j] += std::abs(a.at(i, j));
      signed_means[j] += a.at(i, j);
    }
  }
  for (std::size_t j = 0; j < n; ++j) {
    v.scores[j] /= static_cast<double>(rows);
    signed_means[j] /= static_cast<double>(rows);
  }
  v.signed_means = std::move(signed_means);
  return v;
}

ImportanceVector summarize(std::span<const AttributionMatrix> per_label) {
  if (per_label.empty()) throw Error("nothing to summarize");
  if (per_label.size() == 1) return summarize(per_label.front());
  ImportanceVector out = summarize(per_label.front());
  for (std::size_t t = 1; t < per_label.size(); ++t) {
    if (per_label[t].feature_names != out.feature_names) {
      throw FeatureMismatchError("per-label attribution matrices disagree on features");
    }
    const ImportanceVector s = summarize(per_label[t]);
    for (std::size_t j = 0; j < out.size(); ++j) {
      out.scores[j] += s.scores[j];
      (*out.signed_means)[j] += (*s.signed_means)[j];
    }
  }
  const double inv = 1.0 / static_cast<double>(per_label.size());
  for (std::size_t j = 0; j < out.size(); ++j) {
    out.scores[j] *= inv;
    (*out.signed_means)[j] *= inv;
  }
  return out;
}

namespace {

json matrix_to_json(const AttributionMatrix& a) {
  json rows = json::array();
  for (std::size_t i = 0; i < a.n_samples(); ++i) {
    auto r = a.row(i);
    rows.push_back(std::vector<double>(r.begin(), r.end()));
  }
  return {{"feature_names", a.feature_names},
          {"base_value", a.base_value},
          {"target", std::string(to_string(a.target))},
          {"method", a.method},
          {"values", std::move(rows)}};
}

AttributionMatrix matrix_from_json(const json& j) {
  AttributionMatrix a;
  a.feature_names = j.at("feature_names").get<std::vector<std::string>>();
  a.base_value = j.at("base_value").get<double>();
  a.target = parse_label(j.at("target").get<std::string>());
  a.method = j.value("method", "external");
  for (const auto& row : j.at("values")) {
    auto r = row.get<std::vector<double>>();
    if (r.size() != a.feature_names.size()) {
      throw ParseError(fmt::format("attribution row {} has {} values, expected {}", a.n_samples(), r.size(),
                                   a.feature_names.size()));
    }
    for (double v : r) {
      if (!std::isfinite(v)) throw ParseError("attribution values must be finite");
    }
    a.values.insert(a.values.end(), r.begin(), r.end());
  }
  std::set<std::string> names(a.feature_names.begin(), a.feature_names.end());
  if (names.size() != a.feature_names.size()) throw ParseError("attribution file repeats a feature name");
  return a;
}

}  // namespace

std::string attributions_to_json(const AttributionFile& f) {
  json j;
  if (f.explanations.size() == 1) {
    j = matrix_to_json(f.explanations.front());
  } else {
    json arr = json::array();
    for (const auto& a : f.explanations) arr.push_back(matrix_to_json(a));
    j["explanations"] = std::move(arr);
  }
  if (!f.task.empty()) j["task"] = f.task;
  if (!f.scenario.empty()) j["scenario"] = f.scenario;
  return j.dump() + "\n";
}

AttributionFile attributions_from_json(std::string_view text) {
  AttributionFile f;
  try {
    const json j = json::parse(text);
    if (!j.is_object()) throw ParseError("attribution file must hold a JSON object");
    f.task = j.value("task", "");
    f.scenario = j.value("scenario", "");
    if (j.contains("explanations")) {
      for (const auto& e : j.at("explanations")) f.explanations.push_back(matrix_from_json(e));
    } else {
      f.explanations.push_back(matrix_from_json(j));
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("attribution file: ") + e.what());
  }
  if (f.explanations.empty()) throw ParseError("attribution file holds no explanations");
  return f;
}

}  // namespace xstab
