#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "xstab/tabular.hpp"

namespace xstab {

struct PreprocessConfig {
  double missing_threshold = 0.5;       // drop columns with a larger missing fraction
  std::size_t cardinality_threshold = 50;  // more distinct categories -> frequency encoding

  void validate() const;
};

enum class EncoderKind { Scaled, OneHot, Frequency };

struct NumericStats {
  double median = 0.0;
  double mean = 0.0;
  double std = 1.0;  // 1 for constant columns, so scaling is a pure shift
};

struct CategoricalEncoding {
  std::string mode;
  EncoderKind encoder = EncoderKind::OneHot;
  std::vector<std::string> categories;  // sorted, frozen at fit time
  std::vector<std::size_t> counts;      // training count per category
};

struct KeptColumn {
  std::string name;
  DomainTag domain = DomainTag::Other;
  ColumnKind kind = ColumnKind::Numeric;
  NumericStats numeric;
  CategoricalEncoding categorical;
};

struct FittedPreprocessor {
  std::vector<KeptColumn> kept_columns;
  std::vector<std::string> excluded_columns;
  // scaler_<col>, ohe_<col>_<category>, freq_<col>
  std::vector<std::string> output_feature_names;
  std::vector<DomainTag> output_domains;
  std::vector<ClassLabel> classes;  // labels seen while fitting, progression order
};

// Dense numeric table consumed by every model and explainer.
struct FeatureMatrix {
  std::vector<std::string> feature_names;
  std::vector<double> values;  // row-major, n_rows x n_features
  std::vector<ClassLabel> labels;
  std::vector<std::string> subject_ids;
  std::vector<std::uint8_t> synthetic;  // 1 for oversampled rows
  std::vector<ClassLabel> classes;

  std::size_t n_rows() const { return labels.size(); }
  std::size_t n_features() const { return feature_names.size(); }
  std::span<const double> row(std::size_t i) const {
    return {values.data() + i * n_features(), n_features()};
  }
  double at(std::size_t i, std::size_t j) const { return values[i * n_features() + j]; }
  double& at(std::size_t i, std::size_t j) { return values[i * n_features() + j]; }
  std::size_t synthetic_count() const;

  FeatureMatrix select_rows(std::span<const std::size_t> rows) const;
  // Rows whose subject id is in `subjects`.
  FeatureMatrix select_subjects(const std::set<std::string>& subjects) const;
  void validate() const;
};

FittedPreprocessor fit_preprocessor(const Dataset& train, const PreprocessConfig& cfg);
FeatureMatrix apply_preprocessor(const FittedPreprocessor& p, const Dataset& d);

// Header: feature names, then label, subject_id, synthetic.
std::string feature_matrix_to_csv(const FeatureMatrix& m);
FeatureMatrix feature_matrix_from_csv(std::string_view text);

struct Fold {
  std::vector<std::string> train_subjects;
  std::vector<std::string> validation_subjects;
};

struct SplitPlan {
  std::vector<std::string> train_subjects;
  std::vector<std::string> test_subjects;
  std::vector<Fold> folds;
};

// Subject-level hold-out: ceil(test_fraction * n_subjects) subjects go to test.
SplitPlan subject_split(const Dataset& d, double test_fraction, std::uint64_t seed);

// k near-equal validation groups (sizes differ by at most one).
std::vector<Fold> kfold_subjects(std::span<const std::string> train_subjects, std::size_t k, std::uint64_t seed);

// Oversamples every non-majority label to the majority count by interpolating
// toward one of the k nearest same-label rows. Original rows come first and
// are untouched.
FeatureMatrix smote_oversample(const FeatureMatrix& m, std::size_t k_neighbors, std::uint64_t seed);

}  // namespace xstab
