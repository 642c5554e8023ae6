#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace xstab {

// Cognitive stage. The enumerator order is the progression order.
enum class ClassLabel : std::uint8_t { NC = 0, MCI = 1, AD = 2 };

inline constexpr ClassLabel kAllLabels[] = {ClassLabel::NC, ClassLabel::MCI, ClassLabel::AD};

std::string_view to_string(ClassLabel label);
ClassLabel parse_label(std::string_view s);
inline int ordinal(ClassLabel label) { return static_cast<int>(label); }

enum class DomainTag : std::uint8_t { Cognitive, Functional, Packet, Language, Genetic, Other };

std::string_view to_string(DomainTag tag);
// Empty input maps to Other; unknown names throw ParseError.
DomainTag parse_domain(std::string_view s);

enum class ColumnKind { Numeric, Categorical };

using NumericCells = std::vector<std::optional<double>>;
using CategoricalCells = std::vector<std::optional<std::string>>;

struct Column {
  std::string name;
  DomainTag domain = DomainTag::Other;
  std::variant<NumericCells, CategoricalCells> cells;

  ColumnKind kind() const {
    return std::holds_alternative<NumericCells>(cells) ? ColumnKind::Numeric : ColumnKind::Categorical;
  }
  std::size_t size() const;
  bool is_missing(std::size_t row) const;
  const NumericCells& numeric() const { return std::get<NumericCells>(cells); }
  const CategoricalCells& categorical() const { return std::get<CategoricalCells>(cells); }
};

// Longitudinal cohort: one row per (subject, visit).
struct Dataset {
  std::vector<Column> columns;
  std::vector<std::string> subject_ids;
  std::vector<std::int32_t> visit_index;
  std::vector<double> visit_age_years;
  std::vector<ClassLabel> labels;

  std::size_t n_rows() const { return labels.size(); }
  const Column* find_column(std::string_view name) const;
  // Distinct subject ids in order of first appearance.
  std::vector<std::string> subjects() const;
  Dataset select_rows(std::span<const std::size_t> rows) const;

  // Throws LoadError when a structural invariant is broken: ragged columns,
  // duplicate (subject, visit), or ages decreasing along visit order.
  void validate() const;
};

// Names of the bookkeeping columns plus per-feature declarations.
struct Schema {
  struct ColumnSpec {
    ColumnKind kind = ColumnKind::Numeric;
    DomainTag domain = DomainTag::Other;
  };
  std::string subject_col = "subject_id";
  std::string visit_col = "visit";
  std::string age_col = "age";
  std::string label_col = "label";
  std::map<std::string, ColumnSpec> columns;

  static Schema from_json_text(std::string_view text);
  std::string to_json_text() const;
};

Schema schema_of(const Dataset& d);

Dataset load_dataset(const std::filesystem::path& data_path, const std::filesystem::path& schema_path);
Dataset parse_dataset(std::string_view csv_text, const Schema& schema);
std::string dataset_to_csv(const Dataset& d, const Schema& schema);
void write_dataset(const Dataset& d, const std::filesystem::path& data_path,
                   const std::filesystem::path& schema_path);

enum class Task { Diagnosis, Prognosis };

std::string_view to_string(Task task);
Task parse_task(std::string_view s);

struct ScenarioSpec {
  Task task = Task::Diagnosis;
  std::vector<ClassLabel> labels;  // 2 = binary, 3 = multiclass, progression order
  double horizon_years = 4.0;      // prognosis only

  bool binary() const { return labels.size() == 2; }
  // "NC vs AD"
  std::string name() const;
  // "diagnosis_NC_vs_AD", safe as a directory name.
  std::string key() const;
  void validate() const;
};

// Four diagnosis then four prognosis scenarios: NC/AD, NC/MCI, MCI/AD, NC/MCI/AD.
std::vector<ScenarioSpec> default_scenarios();

// Diagnosis: rows whose label is in the scenario. Prognosis: one baseline row
// per subject relabeled with the follow-up visit nearest baseline age +
// horizon (within one year; earlier visit wins ties).
Dataset select_scenario(const Dataset& d, const ScenarioSpec& s);

struct SynthConfig {
  std::size_t n_subjects = 500;
  std::size_t visits_min = 1;
  std::size_t visits_max = 7;
  std::array<double, 3> label_prior{0.5, 0.2, 0.3};
  double separability = 1.0;
  double missing_rate = 0.0;
  std::map<std::string, double> column_missing_rate;  // overrides missing_rate
  double progression_rate = 0.15;
  std::uint64_t seed = 42;

  void validate() const;
  std::string to_json_text() const;
  static SynthConfig from_json_text(std::string_view text);
};

// Pure function of the config: equal configs give bit-identical datasets.
Dataset generate_synthetic(const SynthConfig& cfg);

}  // namespace xstab
