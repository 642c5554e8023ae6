#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "xstab/models.hpp"
#include "xstab/plots.hpp"
#include "xstab/preprocess.hpp"
#include "xstab/report.hpp"
#include "xstab/shap.hpp"
#include "xstab/stability.hpp"
#include "xstab/tabular.hpp"

namespace xstab {

struct ShapSettings {
  std::string method = "auto";          // auto | exact | sampled
  std::size_t exact_max_features = 10;  // auto: enumerate up to this many features
  std::size_t n_permutations = 100;
  std::size_t background_rows = 100;
  bool correct_additivity = true;

  bool operator==(const ShapSettings&) const = default;
};

struct ExperimentConfig {
  std::uint64_t seed = 42;
  // Synthetic cohort, or a dataset + schema on disk when unset.
  std::optional<SynthConfig> synthetic = SynthConfig{};
  std::string data_path;
  std::string schema_path;
  std::vector<ScenarioSpec> scenarios = default_scenarios();
  PreprocessConfig preprocess;
  double test_fraction = 0.2;
  std::size_t folds = 10;
  std::size_t smote_k = 5;
  std::vector<CandidateSpec> candidates = default_candidates();
  ShapSettings shap;
  std::size_t fi_repeats = 5;
  PlotSpec plot;
  // Execution settings; they never change the produced bytes.
  std::size_t jobs = 1;
  std::string output_dir = "xstab_run";

  void validate() const;
  // include_runtime = false drops jobs and output_dir (the archived form).
  std::string to_json_text(bool include_runtime = true) const;
  static ExperimentConfig from_json_text(std::string_view text);
};

bool same_settings(const ExperimentConfig& a, const ExperimentConfig& b);

struct LeakageAudit {
  bool train_test_disjoint = false;
  bool folds_disjoint = false;
  bool folds_cover_train = false;
  std::size_t synthetic_in_validation = 0;
  std::size_t synthetic_in_test = 0;
  std::size_t synthetic_in_final_training = 0;
};

struct ScenarioOutcome {
  ScenarioSpec spec;
  std::string algorithm;
  EvalMetrics test_metrics;
  std::string shap_method;
  std::size_t n_features = 0;
  std::size_t n_train_rows = 0;
  std::size_t n_test_rows = 0;
  LeakageAudit audit;
};

struct Reports {
  StabilityTable within{TableKind::Within, {}};
  StabilityTable cross_scenario{TableKind::CrossScenario, {}};
  StabilityTable cross_task{TableKind::CrossTask, {}};
  std::vector<PerformanceRow> performance;

  bool has_undefined() const;
};

struct ManifestEntry {
  std::string path;  // relative to the bundle root, '/' separated
  std::string sha256;
  std::string kind;
  std::size_t bytes = 0;
};

struct ExperimentResult {
  std::filesystem::path bundle;
  std::vector<ScenarioOutcome> scenarios;
  Reports reports;
  std::vector<ManifestEntry> manifest;
};

using ProgressFn = std::function<void(const std::string&)>;

// Full pipeline. Every file goes into cfg.output_dir and is listed in
// manifest.json with its SHA-256. On failure the manifest is still written,
// marked incomplete, and the error (naming scenario and stage) is rethrown.
ExperimentResult run_experiment(const ExperimentConfig& cfg, const ProgressFn& progress = {});

// Stability and performance tables computed purely from a bundle's archived
// FI, attribution, domain and metric files.
Reports reports_from_bundle(const std::filesystem::path& bundle);
// Writes reports/<table>.{md,csv,json}; returns the paths relative to root.
std::vector<std::string> write_reports(const Reports& r, const std::filesystem::path& root);

std::string manifest_to_json(const std::vector<ManifestEntry>& entries, bool complete, const std::string& error = {});
std::vector<ManifestEntry> manifest_from_json(std::string_view text, bool* complete = nullptr);

// An FI vector file or an attribution file (summarized to mean |SHAP|).
ImportanceVector load_importance(const std::filesystem::path& path);
// Feature -> domain map from either a {"feature": "domain"} file or a
// dataset schema, resolved against encoded names (scaler_X, ohe_X_c, freq_X).
DomainMap load_domain_map(const std::filesystem::path& path, const std::vector<std::string>& features);

// Display form of a task ("Diagnosis").
std::string task_title(Task t);

}  // namespace xstab
