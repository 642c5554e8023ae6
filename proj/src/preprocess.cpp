#include "xstab/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <fmt/format.h>

#include "xstab/common.hpp"
#include "xstab/error.hpp"

namespace xstab {

void PreprocessConfig::validate() const {
  if (!(missing_threshold > 0.0 && missing_threshold <= 1.0)) {
    throw ConfigError("missing_threshold must lie in (0, 1]");
  }
  if (cardinality_threshold < 2) throw ConfigError("cardinality_threshold must be at least 2");
}

std::size_t FeatureMatrix::synthetic_count() const {
  return static_cast<std::size_t>(std::count(synthetic.begin(), synthetic.end(), std::uint8_t{1}));
}

FeatureMatrix FeatureMatrix::select_rows(std::span<const std::size_t> rows) const {
  FeatureMatrix out;
  out.feature_names = feature_names;
  out.classes = classes;
  const std::size_t p = n_features();
  out.values.reserve(rows.size() * p);
  for (std::size_t r : rows) {
    auto src = row(r);
    out.values.insert(out.values.end(), src.begin(), src.end());
    out.labels.push_back(labels[r]);
    out.subject_ids.push_back(subject_ids[r]);
    out.synthetic.push_back(synthetic[r]);
  }
  return out;
}

FeatureMatrix FeatureMatrix::select_subjects(const std::set<std::string>& subjects) const {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < n_rows(); ++i) {
    if (subjects.count(subject_ids[i])) rows.push_back(i);
  }
  return select_rows(rows);
}

void FeatureMatrix::validate() const {
  const std::size_t n = n_rows();
  if (values.size() != n * n_features() || subject_ids.size() != n || synthetic.size() != n) {
    throw Error("feature matrix has inconsistent dimensions");
  }
  std::set<std::string_view> names;
  for (const auto& name : feature_names) {
    if (!names.insert(name).second) throw Error(fmt::format("duplicate feature name '{}'", name));
  }
  for (double v : values) {
    if (!std::isfinite(v)) throw Error("feature matrix holds a non-finite value");
  }
}

FittedPreprocessor fit_preprocessor(const Dataset& train, const PreprocessConfig& cfg) {
  cfg.validate();
  const std::size_t n = train.n_rows();
  if (n == 0) throw FitError("cannot fit a preprocessor on an empty dataset");

  FittedPreprocessor p;
  for (const auto& col : train.columns) {
    std::size_t missing = 0;
    for (std::size_t i = 0; i < n; ++i) missing += col.is_missing(i) ? 1 : 0;
    const double fraction = static_cast<double>(missing) / static_cast<double>(n);
    if (fraction > cfg.missing_threshold || missing == n) {
      p.excluded_columns.push_back(col.name);
      continue;
    }

    KeptColumn kept{col.name, col.domain, col.kind(), {}, {}};
    if (col.kind() == ColumnKind::Numeric) {
      std::vector<double> obs;
      for (const auto& cell : col.numeric()) {
        if (cell) obs.push_back(*cell);
      }
      std::sort(obs.begin(), obs.end());
      const std::size_t m = obs.size();
      kept.numeric.median = m % 2 ? obs[m / 2] : 0.5 * (obs[m / 2 - 1] + obs[m / 2]);
      kept.numeric.mean = std::accumulate(obs.begin(), obs.end(), 0.0) / static_cast<double>(m);
      if (m < 2 || obs.front() == obs.back()) {
        kept.numeric.std = 1.0;
      } else {
        double ss = 0.0;
        for (double v : obs) ss += (v - kept.numeric.mean) * (v - kept.numeric.mean);
        kept.numeric.std = std::sqrt(ss / static_cast<double>(m - 1));
      }
      p.output_feature_names.push_back("scaler_" + col.name);
      p.output_domains.push_back(col.domain);
    } else {
      std::map<std::string, std::size_t> counts;
      for (const auto& cell : col.categorical()) {
        if (cell) ++counts[*cell];
      }
      auto& enc = kept.categorical;
      std::size_t best = 0;
      for (const auto& [cat, count] : counts) {
        enc.categories.push_back(cat);
        enc.counts.push_back(count);
        if (count > best) {  // map order: lexicographically smallest wins ties
          best = count;
          enc.mode = cat;
        }
      }
      if (counts.size() > cfg.cardinality_threshold) {
        enc.encoder = EncoderKind::Frequency;
        p.output_feature_names.push_back("freq_" + col.name);
        p.output_domains.push_back(col.domain);
      } else {
        enc.encoder = EncoderKind::OneHot;
        for (const auto& cat : enc.categories) {
          p.output_feature_names.push_back("ohe_" + col.name + "_" + cat);
          p.output_domains.push_back(col.domain);
        }
      }
    }
    p.kept_columns.push_back(std::move(kept));
  }

  for (ClassLabel l : kAllLabels) {
    if (std::find(train.labels.begin(), train.labels.end(), l) != train.labels.end()) p.classes.push_back(l);
  }
  return p;
}

FeatureMatrix apply_preprocessor(const FittedPreprocessor& p, const Dataset& d) {
  FeatureMatrix m;
  m.feature_names = p.output_feature_names;
  m.classes = p.classes;
  m.labels = d.labels;
  m.subject_ids = d.subject_ids;
  m.synthetic.assign(d.n_rows(), 0);
  const std::size_t n = d.n_rows();
  const std::size_t width = p.output_feature_names.size();
  m.values.assign(n * width, 0.0);

  std::size_t offset = 0;
  for (const auto& kept : p.kept_columns) {
    const Column* col = d.find_column(kept.name);
    if (!col) throw ApplyError(fmt::format("dataset lacks fitted column '{}'", kept.name));
    if (col->kind() != kept.kind) throw ApplyError(fmt::format("column '{}' changed kind since fitting", kept.name));

    if (kept.kind == ColumnKind::Numeric) {
      const auto& cells = col->numeric();
      for (std::size_t i = 0; i < n; ++i) {
        const double v = cells[i].value_or(kept.numeric.median);
        m.values[i * width + offset] = (v - kept.numeric.mean) / kept.numeric.std;
      }
      offset += 1;
      continue;
    }
    const auto& enc = kept.categorical;
    const auto& cells = col->categorical();
    for (std::size_t i = 0; i < n; ++i) {
      const std::string& v = cells[i] ? *cells[i] : enc.mode;
      auto it = std::lower_bound(enc.categories.begin(), enc.categories.end(), v);
      const bool known = it != enc.categories.end() && *it == v;
      const auto idx = static_cast<std::size_t>(it - enc.categories.begin());
      if (enc.encoder == EncoderKind::Frequency) {
        m.values[i * width + offset] = known ? static_cast<double>(enc.counts[idx]) : 0.0;
      } else if (known) {
        m.values[i * width + offset + idx] = 1.0;
      }
    }
    offset += enc.encoder == EncoderKind::Frequency ? 1 : enc.categories.size();
  }
  return m;
}

std::string feature_matrix_to_csv(const FeatureMatrix& m) {
  std::vector<std::string> header = m.feature_names;
  header.insert(header.end(), {"label", "subject_id", "synthetic"});
  std::string out = join_csv(header) + "\n";
  std::vector<std::string> row;
  for (std::size_t i = 0; i < m.n_rows(); ++i) {
    row.clear();
    for (double v : m.row(i)) row.push_back(format_double(v));
    row.emplace_back(to_string(m.labels[i]));
    row.push_back(m.subject_ids[i]);
    row.push_back(m.synthetic[i] ? "1" : "0");
    out += join_csv(row) + "\n";
  }
  return out;
}

FeatureMatrix feature_matrix_from_csv(std::string_view text) {
  std::vector<std::string> lines = split(text, '\n');
  while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  if (lines.empty()) throw ParseError("feature matrix file is empty");
  std::vector<std::string> header = parse_csv_line(lines[0]);
  if (header.size() < 3 || header[header.size() - 3] != "label" || header[header.size() - 2] != "subject_id" ||
      header.back() != "synthetic") {
    throw ParseError("feature matrix header must end with label,subject_id,synthetic");
  }
  FeatureMatrix m;
  m.feature_names.assign(header.begin(), header.end() - 3);
  const std::size_t p = m.feature_names.size();
  for (std::size_t li = 1; li < lines.size(); ++li) {
    auto f = parse_csv_line(lines[li]);
    if (f.size() != header.size()) {
      throw ParseError(fmt::format("line {}: expected {} fields, found {}", li + 1, header.size(), f.size()));
    }
    for (std::size_t j = 0; j < p; ++j) {
      double v = 0.0;
      if (!parse_double(f[j], v)) {
        throw ParseError(fmt::format("line {}, field '{}': not a number", li + 1, m.feature_names[j]));
      }
      m.values.push_back(v);
    }
    try {
      m.labels.push_back(parse_label(f[p]));
    } catch (const ParseError& e) {
      throw ParseError(fmt::format("line {}: {}", li + 1, e.what()));
    }
    m.subject_ids.push_back(f[p + 1]);
    m.synthetic.push_back(f[p + 2] == "1" ? 1 : 0);
  }
  for (ClassLabel l : kAllLabels) {
    if (std::find(m.labels.begin(), m.labels.end(), l) != m.labels.end()) m.classes.push_back(l);
  }
  return m;
}

SplitPlan subject_split(const Dataset& d, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw SplitError("test_fraction must lie in (0, 1)");
  std::vector<std::string> subjects = d.subjects();
  if (subjects.size() < 2) throw SplitError("a subject-level split needs at least two subjects");
  std::sort(subjects.begin(), subjects.end());
  Rng rng(seed);
  rng.shuffle(subjects);

  const double n = static_cast<double>(subjects.size());
  auto n_test = static_cast<std::size_t>(std::ceil(test_fraction * n - 1e-9));
  n_test = std::clamp<std::size_t>(n_test, 1, subjects.size() - 1);

  SplitPlan plan;
  plan.test_subjects.assign(subjects.begin(), subjects.begin() + static_cast<std::ptrdiff_t>(n_test));
  plan.train_subjects.assign(subjects.begin() + static_cast<std::ptrdiff_t>(n_test), subjects.end());
  std::sort(plan.test_subjects.begin(), plan.test_subjects.end());
  std::sort(plan.train_subjects.begin(), plan.train_subjects.end());
  return plan;
}

std::vector<Fold> kfold_subjects(std::span<const std::string> train_subjects, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw SplitError("k-fold needs k >= 2");
  if (k > train_subjects.size()) {
    throw SplitError(fmt::format("cannot make {} folds from {} subjects", k, train_subjects.size()));
  }
  std::vector<std::string> subjects(train_subjects.begin(), train_subjects.end());
  std::sort(subjects.begin(), subjects.end());
  Rng rng(seed);
  rng.shuffle(subjects);

  std::vector<Fold> folds(k);
  for (std::size_t i = 0; i < subjects.size(); ++i) folds[i % k].validation_subjects.push_back(subjects[i]);
  for (auto& fold : folds) {
    std::sort(fold.validation_subjects.begin(), fold.validation_subjects.end());
    const std::set<std::string> held(fold.validation_subjects.begin(), fold.validation_subjects.end());
    for (const auto& s : train_subjects) {
      if (!held.count(s)) fold.train_subjects.push_back(s);
    }
    std::sort(fold.train_subjects.begin(), fold.train_subjects.end());
  }
  return folds;
}

}  // namespace xstab
