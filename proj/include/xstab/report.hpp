#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "xstab/models.hpp"
#include "xstab/stability.hpp"

namespace xstab {

enum class ReportFormat { Markdown, Csv, Json };
ReportFormat parse_format(std::string_view s);  // md | csv | json
std::string_view extension(ReportFormat f);

enum class TableKind { Within, CrossScenario, CrossTask };
std::string_view to_string(TableKind k);  // file stem: within_model, cross_scenario, cross_task
TableKind parse_table_kind(std::string_view s);

struct StabilityTable {
  TableKind kind = TableKind::Within;
  std::vector<StabilityRecord> rows;

  bool operator==(const StabilityTable&) const = default;
  bool has_undefined() const;
};

// Markdown rounds to three decimals and omits bookkeeping fields
// (n_shared_features, clamped k); CSV and JSON are lossless.
std::string table_to_markdown(const StabilityTable& t);
std::string table_to_csv(const StabilityTable& t);
std::string table_to_json(const StabilityTable& t);
std::string render(const StabilityTable& t, ReportFormat f);

StabilityTable table_from_markdown(std::string_view text);
StabilityTable table_from_csv(std::string_view text);
StabilityTable table_from_json(std::string_view text);
StabilityTable parse_table(std::string_view text, ReportFormat f);

// Best-model performance, one entry per scenario.
struct PerformanceRow {
  std::string scenario;
  std::string task;
  std::string algorithm;
  EvalMetrics metrics;
};

std::string performance_to_markdown(const std::vector<PerformanceRow>& rows);
std::string performance_to_csv(const std::vector<PerformanceRow>& rows);
std::string performance_to_json(const std::vector<PerformanceRow>& rows);
std::string render(const std::vector<PerformanceRow>& rows, ReportFormat f);

std::vector<PerformanceRow> performance_from_markdown(std::string_view text);
std::vector<PerformanceRow> performance_from_csv(std::string_view text);
std::vector<PerformanceRow> performance_from_json(std::string_view text);

}  // namespace xstab
