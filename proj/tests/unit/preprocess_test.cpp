#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>

#include "support.hpp"
#include "xstab/common.hpp"
#include "xstab/error.hpp"
#include "xstab/preprocess.hpp"

using namespace xstab;
using xstab::testing::make_matrix;

namespace {

Dataset with_columns(std::vector<Column> cols, std::size_t n) {
  Dataset d;
  d.columns = std::move(cols);
  for (std::size_t i = 0; i < n; ++i) {
    d.subject_ids.push_back("S" + std::to_string(i));
    d.visit_index.push_back(0);
    d.visit_age_years.push_back(70);
    d.labels.push_back(i % 2 ? ClassLabel::AD : ClassLabel::NC);
  }
  return d;
}

Column numeric(const std::string& name, NumericCells cells) { return Column{name, DomainTag::Cognitive, cells}; }
Column categorical(const std::string& name, CategoricalCells cells) {
  return Column{name, DomainTag::Language, cells};
}

const KeptColumn& kept(const FittedPreprocessor& p, const std::string& name) {
  for (const auto& k : p.kept_columns) {
    if (k.name == name) return k;
  }
  throw std::runtime_error("column not kept: " + name);
}

}  // namespace

TEST(Preprocess, ColumnAboveMissingThresholdIsExcluded) {
  NumericCells sixty{std::nullopt, std::nullopt, std::nullopt, std::nullopt, std::nullopt, std::nullopt, 1.0, 2.0,
                     3.0, 4.0};
  NumericCells full{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  const auto p = fit_preprocessor(with_columns({numeric("A", sixty), numeric("B", full)}, 10), {});
  EXPECT_EQ(p.excluded_columns, std::vector<std::string>{"A"});
  EXPECT_EQ(p.output_feature_names, std::vector<std::string>{"scaler_B"});
}

TEST(Preprocess, MedianIgnoresMissing) {
  const auto p = fit_preprocessor(with_columns({numeric("A", {1.0, 2.0, std::nullopt, 100.0})}, 4), {});
  EXPECT_EQ(kept(p, "A").numeric.median, 2.0);
}

TEST(Preprocess, HighCardinalityUsesFrequencyEncoder) {
  CategoricalCells cells;
  for (int i = 0; i < 51; ++i) cells.push_back("c" + std::to_string(i));
  cells.push_back("c0");
  CategoricalCells few{"a", "b", "a", "b"};
  auto p = fit_preprocessor(with_columns({categorical("C", cells)}, cells.size()), {});
  EXPECT_EQ(kept(p, "C").categorical.encoder, EncoderKind::Frequency);
  EXPECT_EQ(p.output_feature_names, std::vector<std::string>{"freq_C"});
  const FeatureMatrix m = apply_preprocessor(p, with_columns({categorical("C", cells)}, cells.size()));
  EXPECT_EQ(m.at(0, 0), 2.0);  // "c0" seen twice while fitting
  EXPECT_EQ(m.at(1, 0), 1.0);

  p = fit_preprocessor(with_columns({categorical("C", few)}, 4), {});
  EXPECT_EQ(kept(p, "C").categorical.encoder, EncoderKind::OneHot);
  EXPECT_EQ(p.output_feature_names, (std::vector<std::string>{"ohe_C_a", "ohe_C_b"}));
}

TEST(Preprocess, ScalingUsesFittedMeanAndStd) {
  FittedPreprocessor p;
  KeptColumn k;
  k.name = "A";
  k.numeric = {10.0, 10.0, 2.0};
  p.kept_columns.push_back(k);
  p.output_feature_names = {"scaler_A"};
  p.output_domains = {DomainTag::Cognitive};
  const FeatureMatrix m = apply_preprocessor(p, with_columns({numeric("A", {14.0})}, 1));
  EXPECT_EQ(m.at(0, 0), 2.0);
}

TEST(Preprocess, MissingCategoryImputedWithMode) {
  CategoricalCells train{"en", "en", "sp"};
  const auto p = fit_preprocessor(with_columns({categorical("L", train)}, 3), {});
  EXPECT_EQ(kept(p, "L").categorical.mode, "en");
  const FeatureMatrix m = apply_preprocessor(p, with_columns({categorical("L", {std::nullopt})}, 1));
  EXPECT_EQ(m.feature_names, (std::vector<std::string>{"ohe_L_en", "ohe_L_sp"}));
  EXPECT_EQ(m.at(0, 0), 1.0);
  EXPECT_EQ(m.at(0, 1), 0.0);
}

TEST(Preprocess, UnseenCategoryEncodesAsZeros) {
  const auto p = fit_preprocessor(with_columns({categorical("L", {"en", "sp"})}, 2), {});
  const FeatureMatrix m = apply_preprocessor(p, with_columns({categorical("L", {"fr"})}, 1));
  EXPECT_EQ(m.at(0, 0), 0.0);
  EXPECT_EQ(m.at(0, 1), 0.0);
}

TEST(Preprocess, MissingFittedColumnIsNamed) {
  const auto p = fit_preprocessor(with_columns({numeric("A", {1.0, 2.0})}, 2), {});
  try {
    apply_preprocessor(p, with_columns({numeric("B", {1.0})}, 1));
    FAIL();
  } catch (const ApplyError& e) {
    EXPECT_NE(std::string(e.what()).find("'A'"), std::string::npos);
  }
}

TEST(Preprocess, EmptyDatasetIsAFitError) {
  EXPECT_THROW(fit_preprocessor(with_columns({numeric("A", {})}, 0), {}), FitError);
}

TEST(Preprocess, FitThenApplyStandardizes) {
  SynthConfig cfg;
  cfg.missing_rate = 0.1;
  const Dataset d = generate_synthetic(cfg);
  const auto p = fit_preprocessor(d, {});
  const FeatureMatrix m = apply_preprocessor(p, d);
  std::size_t col = 0;
  for (const auto& k : p.kept_columns) {
    if (k.kind != ColumnKind::Numeric) {
      col += k.categorical.encoder == EncoderKind::Frequency ? 1 : k.categorical.categories.size();
      continue;
    }
    // Imputed cells sit at the median, so check the observed cells only.
    const auto& cells = d.find_column(k.name)->numeric();
    double s = 0, s2 = 0, n = 0;
    for (std::size_t i = 0; i < m.n_rows(); ++i) {
      if (!cells[i]) continue;
      s += m.at(i, col);
      n += 1;
    }
    const double mean = s / n;
    for (std::size_t i = 0; i < m.n_rows(); ++i) {
      if (cells[i]) s2 += (m.at(i, col) - mean) * (m.at(i, col) - mean);
    }
    EXPECT_NEAR(mean, 0.0, 1e-9) << k.name;
    if (k.numeric.std != 1.0 || s2 > 0) {
      EXPECT_NEAR(std::sqrt(s2 / (n - 1)), 1.0, 1e-9) << k.name;
    }
    ++col;
  }
  EXPECT_EQ(col, m.n_features());
}

TEST(Preprocess, TestRowsNeverInfluenceFittedStatistics) {
  const Dataset train = with_columns({numeric("A", {1.0, 2.0, 3.0})}, 3);
  const Dataset test1 = with_columns({numeric("A", {1000.0})}, 1);
  const auto p = fit_preprocessor(train, {});
  EXPECT_EQ(kept(p, "A").numeric.mean, 2.0);
  EXPECT_EQ(kept(p, "A").numeric.std, 1.0);
  EXPECT_EQ(apply_preprocessor(p, test1).at(0, 0), 998.0);
}

TEST(FeatureMatrixCsv, RoundTrip) {
  auto m = make_matrix({"a", "b"}, {{0.1, -2}, {1e-17, 3}}, {ClassLabel::NC, ClassLabel::AD});
  m.synthetic[1] = 1;
  const FeatureMatrix back = feature_matrix_from_csv(feature_matrix_to_csv(m));
  EXPECT_EQ(back.values, m.values);
  EXPECT_EQ(back.labels, m.labels);
  EXPECT_EQ(back.synthetic, m.synthetic);
  EXPECT_EQ(back.subject_ids, m.subject_ids);
}

TEST(SubjectSplit, CeilingOfFraction) {
  const Dataset d = with_columns({numeric("A", NumericCells(10, 1.0))}, 10);
  const SplitPlan plan = subject_split(d, 0.2, 1);
  EXPECT_EQ(plan.test_subjects.size(), 2u);
  EXPECT_EQ(plan.train_subjects.size(), 8u);
  const Dataset d11 = with_columns({numeric("A", NumericCells(11, 1.0))}, 11);
  EXPECT_EQ(subject_split(d11, 0.2, 1).test_subjects.size(), 3u);
}

TEST(SubjectSplit, VisitsOfOneSubjectStayTogether) {
  const Dataset d = generate_synthetic(SynthConfig{});
  const SplitPlan plan = subject_split(d, 0.2, 9);
  const std::set<std::string> test(plan.test_subjects.begin(), plan.test_subjects.end());
  const std::set<std::string> train(plan.train_subjects.begin(), plan.train_subjects.end());
  for (const auto& s : test) EXPECT_EQ(train.count(s), 0u);
  EXPECT_EQ(test.size() + train.size(), d.subjects().size());
}

TEST(SubjectSplit, DeterministicAndErrors) {
  const Dataset d = generate_synthetic(SynthConfig{});
  const SplitPlan a = subject_split(d, 0.2, 5), b = subject_split(d, 0.2, 5);
  EXPECT_EQ(a.test_subjects, b.test_subjects);
  EXPECT_EQ(a.train_subjects, b.train_subjects);
  EXPECT_THROW(subject_split(with_columns({numeric("A", {1.0})}, 1), 0.2, 1), SplitError);
}

TEST(KFold, OneSubjectPerFold) {
  const auto subjects = xstab::testing::names(10, "S");
  const auto folds = kfold_subjects(subjects, 10, 3);
  for (const auto& f : folds) {
    EXPECT_EQ(f.validation_subjects.size(), 1u);
    EXPECT_EQ(f.train_subjects.size(), 9u);
  }
}

TEST(KFold, NearEqualPartition) {
  const auto subjects = xstab::testing::names(23, "S");
  const auto folds = kfold_subjects(subjects, 10, 3);
  std::map<std::size_t, int> sizes;
  std::multiset<std::string> all;
  for (const auto& f : folds) {
    sizes[f.validation_subjects.size()]++;
    all.insert(f.validation_subjects.begin(), f.validation_subjects.end());
    for (const auto& v : f.validation_subjects) {
      EXPECT_EQ(std::count(f.train_subjects.begin(), f.train_subjects.end(), v), 0);
    }
    EXPECT_EQ(f.train_subjects.size() + f.validation_subjects.size(), 23u);
  }
  EXPECT_EQ(sizes, (std::map<std::size_t, int>{{2, 7}, {3, 3}}));
  EXPECT_EQ(all, std::multiset<std::string>(subjects.begin(), subjects.end()));
  EXPECT_THROW(kfold_subjects(subjects, 24, 3), SplitError);
}

TEST(Smote, BalancesToMajority) {
  std::vector<std::vector<double>> rows;
  std::vector<ClassLabel> labels;
  Rng r(1);
  for (int i = 0; i < 140; ++i) {
    rows.push_back({r.normal(), r.normal()});
    labels.push_back(i < 100 ? ClassLabel::NC : ClassLabel::AD);
  }
  const auto m = make_matrix({"a", "b"}, rows, labels);
  const auto out = smote_oversample(m, 5, 7);
  std::map<ClassLabel, int> counts;
  for (auto l : out.labels) counts[l]++;
  EXPECT_EQ(counts[ClassLabel::NC], 100);
  EXPECT_EQ(counts[ClassLabel::AD], 100);
  EXPECT_EQ(out.synthetic_count(), 60u);
  // Originals come first, untouched.
  for (std::size_t i = 0; i < m.values.size(); ++i) EXPECT_EQ(out.values[i], m.values[i]);
  for (std::size_t i = 0; i < 140; ++i) EXPECT_EQ(out.synthetic[i], 0);
}

TEST(Smote, SyntheticRowsLieOnSameLabelSegments) {
  std::vector<std::vector<double>> rows;
  std::vector<ClassLabel> labels;
  Rng r(2);
  for (int i = 0; i < 30; ++i) {
    rows.push_back({r.normal(), r.normal(), r.normal()});
    labels.push_back(i < 20 ? ClassLabel::NC : ClassLabel::MCI);
  }
  const auto m = make_matrix({"a", "b", "c"}, rows, labels);
  const auto out = smote_oversample(m, 3, 4);
  for (std::size_t s = m.n_rows(); s < out.n_rows(); ++s) {
    EXPECT_EQ(out.labels[s], ClassLabel::MCI);
    bool on_segment = false;
    for (std::size_t a = 20; a < 30 && !on_segment; ++a) {
      for (std::size_t b = 20; b < 30 && !on_segment; ++b) {
        if (a == b) continue;
        // Solve for lambda on the first coordinate, then check the rest.
        const double dx = m.at(b, 0) - m.at(a, 0);
        if (dx == 0) continue;
        const double lambda = (out.at(s, 0) - m.at(a, 0)) / dx;
        if (lambda < -1e-12 || lambda > 1 + 1e-12) continue;
        bool ok = true;
        for (std::size_t j = 1; j < 3; ++j) {
          ok = ok && std::abs(m.at(a, j) + lambda * (m.at(b, j) - m.at(a, j)) - out.at(s, j)) < 1e-9;
        }
        on_segment = ok;
      }
    }
    EXPECT_TRUE(on_segment) << "synthetic row " << s;
  }
}

TEST(Smote, NeighbourCountIsClamped) {
  const auto m = make_matrix({"a"}, {{0}, {1}, {2}, {3}, {10}, {11}, {12}},
                             {ClassLabel::NC, ClassLabel::NC, ClassLabel::NC, ClassLabel::NC, ClassLabel::AD,
                              ClassLabel::AD, ClassLabel::AD});
  const auto out = smote_oversample(m, 50, 1);
  EXPECT_EQ(out.n_rows(), 8u);
  EXPECT_GE(out.at(7, 0), 10.0);
  EXPECT_LE(out.at(7, 0), 12.0);
}

TEST(Smote, SingleRowMinorityIsNamed) {
  const auto m = make_matrix({"a"}, {{0}, {1}, {2}}, {ClassLabel::NC, ClassLabel::NC, ClassLabel::AD});
  try {
    smote_oversample(m, 5, 1);
    FAIL();
  } catch (const OversampleError& e) {
    EXPECT_NE(std::string(e.what()).find("AD"), std::string::npos);
  }
}

TEST(Smote, Deterministic) {
  std::vector<std::vector<double>> rows;
  std::vector<ClassLabel> labels;
  Rng r(3);
  for (int i = 0; i < 30; ++i) {
    rows.push_back({r.normal()});
    labels.push_back(i < 25 ? ClassLabel::NC : ClassLabel::AD);
  }
  const auto m = make_matrix({"a"}, rows, labels);
  EXPECT_EQ(smote_oversample(m, 3, 9).values, smote_oversample(m, 3, 9).values);
}
