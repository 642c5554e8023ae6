#include "xstab/report.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <map>

#include <fmt/format.h>

#include "json.hpp"
#include "xstab/common.hpp"
#include "xstab/error.hpp"

namespace xstab {

using nlohmann::json;

ReportFormat parse_format(std::string_view s) {
  if (s == "md" || s == "markdown") return ReportFormat::Markdown;
  if (s == "csv") return ReportFormat::Csv;
  if (s == "json") return ReportFormat::Json;
  throw ConfigError(fmt::format("unknown report format '{}' (expected md, csv or json)", s));
}

std::string_view extension(ReportFormat f) {
  switch (f) {
    case ReportFormat::Markdown: return "md";
    case ReportFormat::Csv: return "csv";
    case ReportFormat::Json: return "json";
  }
  return "txt";
}

std::string_view to_string(TableKind k) {
  switch (k) {
    case TableKind::Within: return "within_model";
    case TableKind::CrossScenario: return "cross_scenario";
    case TableKind::CrossTask: return "cross_task";
  }
  return "?";
}

TableKind parse_table_kind(std::string_view s) {
  if (s == "within_model" || s == "within") return TableKind::Within;
  if (s == "cross_scenario" || s == "scenario") return TableKind::CrossScenario;
  if (s == "cross_task" || s == "task") return TableKind::CrossTask;
  throw ParseError(fmt::format("unknown table kind '{}'", s));
}

bool StabilityTable::has_undefined() const {
  return std::any_of(rows.begin(), rows.end(), [](const StabilityRecord& r) { return r.has_undefined(); });
}

namespace {

constexpr std::string_view kNA = "n/a";
constexpr std::string_view kArrow = " ↔ ";

std::string cell(const std::optional<double>& v) { return v ? format_fixed(*v, 3) : std::string(kNA); }

std::string contribution_cell(const std::optional<ContributionVector>& c) {
  if (!c) return std::string(kNA);
  std::vector<std::string> parts;
  for (double s : c->shares) parts.push_back(format_fixed(s, 3));
  return "(" + fmt::format("{}", fmt::join(parts, ", ")) + ")";
}

std::string md_row(const std::vector<std::string>& cells) {
  return "| " + fmt::format("{}", fmt::join(cells, " | ")) + " |\n";
}

std::string md_separator(std::size_t n) {
  std::string s = "|";
  for (std::size_t i = 0; i < n; ++i) s += "---|";
  return s + "\n";
}

// Markdown reader state: table rows as trimmed cells, with line numbers.
struct MdRow {
  std::size_t line = 0;
  std::vector<std::string> cells;
};

bool is_separator(std::string_view line) {
  return std::all_of(line.begin(), line.end(), [](char c) { return c == '|' || c == '-' || c == ':' || c == ' '; });
}

std::vector<MdRow> md_rows(std::string_view text) {
  std::vector<MdRow> rows;
  std::size_t line_no = 0;
  for (const auto& raw : split(text, '\n')) {
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty() || line.front() != '|' || is_separator(line)) continue;
    auto cells = split(std::string_view(line).substr(1, line.size() - (line.back() == '|' ? 2 : 1)), '|');
    for (auto& c : cells) c = trim(c);
    rows.push_back({line_no, std::move(cells)});
  }
  return rows;
}

std::optional<double> parse_cell(std::string_view s, std::size_t line, std::string_view field) {
  if (s == kNA) return std::nullopt;
  double v = 0.0;
  if (!parse_double(s, v)) throw ParseError(fmt::format("line {}, field {}: '{}' is not a number", line, field, s));
  return v;
}

std::optional<ContributionVector> parse_contribution(std::string_view s, std::size_t line, std::string_view field) {
  if (s == kNA) return std::nullopt;
  if (s.size() < 2 || s.front() != '(' || s.back() != ')') {
    throw ParseError(fmt::format("line {}, field {}: expected a parenthesised vector", line, field));
  }
  const auto parts = split(s.substr(1, s.size() - 2), ',');
  if (parts.size() != 5) {
    throw ParseError(fmt::format("line {}, field {}: expected 5 shares, found {}", line, field, parts.size()));
  }
  ContributionVector cv;
  for (std::size_t i = 0; i < 5; ++i) {
    auto v = parse_cell(trim(parts[i]), line, field);
    if (!v) throw ParseError(fmt::format("line {}, field {}: missing share", line, field));
    cv.shares[i] = *v;
  }
  return cv;
}

// "fi / shap" cells of the cross-task table; "-" marks a metric that only
// exists on the SHAP side.
std::pair<std::string, std::string> split_pair(const std::string& s, std::size_t line, std::string_view field) {
  const auto pos = s.find(" / ");
  if (pos == std::string::npos) throw ParseError(fmt::format("line {}, field {}: expected 'fi / shap'", line, field));
  return {trim(std::string_view(s).substr(0, pos)), trim(std::string_view(s).substr(pos + 3))};
}

void expect_cells(const MdRow& r, std::size_t n) {
  if (r.cells.size() != n) {
    throw ParseError(fmt::format("line {}: expected {} cells, found {}", r.line, n, r.cells.size()));
  }
}

// ---- Markdown emitters -------------------------------------------------

std::string within_markdown(const StabilityTable& t) {
  std::string out = "# Within-model coherence (FI vs SHAP)\n\n";
  out += md_row({"Classifier", "Task", "ρ", "Robust ρ", "J@10", "τ", "Precision", "Recall"});
  out += md_separator(8);
  for (const auto& r : t.rows) {
    out += md_row({r.left, r.task, cell(r.rho), cell(r.robust_rho), cell(r.j10), cell(r.tau), cell(r.precision10),
                   cell(r.recall10)});
  }
  return out;
}

std::vector<std::string> tasks_in_order(const std::vector<StabilityRecord>& rows) {
  std::vector<std::string> tasks;
  for (const auto& r : rows) {
    if (std::find(tasks.begin(), tasks.end(), r.task) == tasks.end()) tasks.push_back(r.task);
  }
  return tasks;
}

std::string cross_scenario_markdown(const StabilityTable& t) {
  const auto tasks = tasks_in_order(t.rows);
  std::vector<std::string> pairs;
  std::map<std::pair<std::string, std::string>, const StabilityRecord*> by_key;
  for (const auto& r : t.rows) {
    const std::string pair = r.left + std::string(kArrow) + r.right;
    if (std::find(pairs.begin(), pairs.end(), pair) == pairs.end()) pairs.push_back(pair);
    by_key[{r.task, pair}] = &r;
  }
  std::string out = "# Cross-scenario stability (SHAP vs SHAP)\n\n";
  std::vector<std::string> header{"Pairwise Comparison"};
  for (const auto& task : tasks) {
    for (const char* m : {"ρ", "J@10", "J@20", "τ", "Sign"}) header.push_back(task + " " + m);
  }
  out += md_row(header);
  out += md_separator(header.size());
  for (const auto& pair : pairs) {
    std::vector<std::string> cells{pair};
    for (const auto& task : tasks) {
      auto it = by_key.find({task, pair});
      if (it == by_key.end()) {
        cells.insert(cells.end(), 5, "");
        continue;
      }
      const auto& r = *it->second;
      for (const auto& v : {r.rho, r.j10, r.j20, r.tau, r.sign_consistency}) cells.push_back(cell(v));
    }
    out += md_row(cells);
  }
  return out;
}

std::string cross_task_markdown(const StabilityTable& t) {
  std::vector<std::string> scenarios;
  std::map<std::string, const StabilityRecord*> fi, shap;
  for (const auto& r : t.rows) {
    if (std::find(scenarios.begin(), scenarios.end(), r.left) == scenarios.end()) scenarios.push_back(r.left);
    (r.basis == MetricBasis::FI_FI ? fi : shap)[r.left] = &r;
  }
  std::string out = "# Cross-task coherence (diagnosis vs prognosis, FI-FI / SHAP-SHAP)\n\n";
  out += md_row({"Scenario", "ρ", "τ", "J@10", "J@20", "Sign", "Contribution Diagnosis", "Contribution Prognosis",
                 "Mean Δ SHAP"});
  out += md_separator(9);
  static const StabilityRecord kEmpty;
  for (const auto& s : scenarios) {
    const StabilityRecord& f = fi.count(s) ? *fi[s] : kEmpty;
    const StabilityRecord& h = shap.count(s) ? *shap[s] : kEmpty;
    out += md_row({s, cell(f.rho) + " / " + cell(h.rho), cell(f.tau) + " / " + cell(h.tau),
                   cell(f.j10) + " / " + cell(h.j10), "- / " + cell(h.j20), cell(h.sign_consistency),
                   contribution_cell(h.contrib_diag), contribution_cell(h.contrib_prog),
                   cell(h.mean_delta_abs_shap)});
  }
  return out;
}

// ---- Markdown readers ---------------------------------------------------

StabilityTable within_from_md(const std::vector<MdRow>& rows) {
  StabilityTable t{TableKind::Within, {}};
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    expect_cells(r, 8);
    StabilityRecord rec;
    rec.basis = MetricBasis::FI_SHAP;
    rec.left = r.cells[0];
    rec.task = r.cells[1];
    rec.rho = parse_cell(r.cells[2], r.line, "ρ");
    rec.robust_rho = parse_cell(r.cells[3], r.line, "Robust ρ");
    rec.j10 = parse_cell(r.cells[4], r.line, "J@10");
    rec.tau = parse_cell(r.cells[5], r.line, "τ");
    rec.precision10 = parse_cell(r.cells[6], r.line, "Precision");
    rec.recall10 = parse_cell(r.cells[7], r.line, "Recall");
    t.rows.push_back(std::move(rec));
  }
  return t;
}

StabilityTable cross_scenario_from_md(const std::vector<MdRow>& rows) {
  const auto& header = rows[0];
  if ((header.cells.size() - 1) % 5 != 0) {
    throw ParseError(fmt::format("line {}: cross-scenario header must have 5 columns per task", header.line));
  }
  std::vector<std::string> tasks;
  for (std::size_t c = 1; c < header.cells.size(); c += 5) {
    const auto& h = header.cells[c];
    const auto pos = h.rfind(' ');
    if (pos == std::string::npos) throw ParseError(fmt::format("line {}: bad column '{}'", header.line, h));
    tasks.push_back(h.substr(0, pos));
  }
  StabilityTable t{TableKind::CrossScenario, {}};
  for (std::size_t k = 0; k < tasks.size(); ++k) {
    for (std::size_t i = 1; i < rows.size(); ++i) {
      const auto& r = rows[i];
      expect_cells(r, header.cells.size());
      const std::size_t base = 1 + 5 * k;
      bool empty = true;
      for (std::size_t c = base; c < base + 5; ++c) empty = empty && r.cells[c].empty();
      if (empty) continue;
      const auto pos = r.cells[0].find(kArrow);
      if (pos == std::string::npos) throw ParseError(fmt::format("line {}: pair must be 'A ↔ B'", r.line));
      StabilityRecord rec;
      rec.basis = MetricBasis::SHAP_SHAP;
      rec.task = tasks[k];
      rec.left = r.cells[0].substr(0, pos);
      rec.right = r.cells[0].substr(pos + kArrow.size());
      rec.rho = parse_cell(r.cells[base], r.line, "ρ");
      rec.j10 = parse_cell(r.cells[base + 1], r.line, "J@10");
      rec.j20 = parse_cell(r.cells[base + 2], r.line, "J@20");
      rec.tau = parse_cell(r.cells[base + 3], r.line, "τ");
      rec.sign_consistency = parse_cell(r.cells[base + 4], r.line, "Sign");
      t.rows.push_back(std::move(rec));
    }
  }
  return t;
}

StabilityTable cross_task_from_md(const std::vector<MdRow>& rows) {
  StabilityTable t{TableKind::CrossTask, {}};
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    expect_cells(r, 9);
    StabilityRecord f, h;
    f.basis = MetricBasis::FI_FI;
    h.basis = MetricBasis::SHAP_SHAP;
    f.left = h.left = r.cells[0];
    const auto [rho_f, rho_s] = split_pair(r.cells[1], r.line, "ρ");
    const auto [tau_f, tau_s] = split_pair(r.cells[2], r.line, "τ");
    const auto [j10_f, j10_s] = split_pair(r.cells[3], r.line, "J@10");
    const auto [j20_f, j20_s] = split_pair(r.cells[4], r.line, "J@20");
    if (j20_f != "-") throw ParseError(fmt::format("line {}, field J@20: FI side must be '-'", r.line));
    f.rho = parse_cell(rho_f, r.line, "ρ");
    h.rho = parse_cell(rho_s, r.line, "ρ");
    f.tau = parse_cell(tau_f, r.line, "τ");
    h.tau = parse_cell(tau_s, r.line, "τ");
    f.j10 = parse_cell(j10_f, r.line, "J@10");
    h.j10 = parse_cell(j10_s, r.line, "J@10");
    h.j20 = parse_cell(j20_s, r.line, "J@20");
    h.sign_consistency = parse_cell(r.cells[5], r.line, "Sign");
    h.contrib_diag = parse_contribution(r.cells[6], r.line, "Contribution Diagnosis");
    h.contrib_prog = parse_contribution(r.cells[7], r.line, "Contribution Prognosis");
    h.mean_delta_abs_shap = parse_cell(r.cells[8], r.line, "Mean Δ SHAP");
    t.rows.push_back(std::move(f));
    t.rows.push_back(std::move(h));
  }
  return t;
}

// ---- CSV -----------------------------------------------------------------

const std::vector<std::string>& csv_header() {
  static const std::vector<std::string> header = [] {
    std::vector<std::string> h{"table", "task", "left", "right", "basis", "rho", "robust_rho", "tau", "j10", "j20",
                               "precision10", "recall10", "sign_consistency", "mean_delta_abs_shap"};
    for (const char* side : {"contrib_diag_", "contrib_prog_"}) {
      for (const char* slot : kContributionSlots) h.push_back(std::string(side) + slot);
    }
    h.insert(h.end(), {"n_shared_features", "j10_k", "j20_k"});
    return h;
  }();
  return header;
}

std::string csv_value(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

std::optional<double> csv_parse(const std::string& s, std::size_t line, std::string_view field) {
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  if (!parse_double(s, v)) throw ParseError(fmt::format("line {}, field {}: '{}' is not a number", line, field, s));
  return v;
}

std::size_t csv_count(const std::string& s, std::size_t line, std::string_view field) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ParseError(fmt::format("line {}, field {}: '{}' is not a count", line, field, s));
  }
  return v;
}

// Non-empty lines with their 1-based line numbers.
std::vector<std::pair<std::size_t, std::string>> text_lines(std::string_view text) {
  std::vector<std::pair<std::size_t, std::string>> out;
  std::size_t n = 0;
  for (auto& l : split(text, '\n')) {
    ++n;
    if (!l.empty() && l.back() == '\r') l.pop_back();
    if (!trim(l).empty()) out.emplace_back(n, std::move(l));
  }
  return out;
}

// ---- JSON ------------------------------------------------------------------

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }
json opt_json(const std::optional<ContributionVector>& v) {
  return v ? json(std::vector<double>(v->shares.begin(), v->shares.end())) : json(nullptr);
}

std::optional<double> opt_double(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

std::optional<ContributionVector> opt_contrib(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  const auto v = j.at(key).get<std::vector<double>>();
  if (v.size() != 5) throw ParseError(fmt::format("field {}: expected 5 shares, found {}", key, v.size()));
  ContributionVector cv;
  std::copy(v.begin(), v.end(), cv.shares.begin());
  return cv;
}

std::string label_cell(std::size_t index, ClassLabel label) { return fmt::format("{} ({})", index, to_string(label)); }

ClassLabel label_from_cell(const std::string& s, std::size_t line) {
  const auto open = s.find('('), close = s.rfind(')');
  if (open == std::string::npos || close == std::string::npos || close < open) {
    throw ParseError(fmt::format("line {}, field Class: expected 'index (label)'", line));
  }
  return parse_label(s.substr(open + 1, close - open - 1));
}

}  // namespace

std::string table_to_markdown(const StabilityTable& t) {
  switch (t.kind) {
    case TableKind::Within: return within_markdown(t);
    case TableKind::CrossScenario: return cross_scenario_markdown(t);
    case TableKind::CrossTask: return cross_task_markdown(t);
  }
  return {};
}

StabilityTable table_from_markdown(std::string_view text) {
  const auto rows = md_rows(text);
  if (rows.empty()) throw ParseError("markdown report contains no table");
  const auto& first = rows[0].cells.at(0);
  if (first == "Classifier") return within_from_md(rows);
  if (first == "Pairwise Comparison") return cross_scenario_from_md(rows);
  if (first == "Scenario") return cross_task_from_md(rows);
  throw ParseError(fmt::format("line {}: unrecognised table header '{}'", rows[0].line, first));
}

std::string table_to_csv(const StabilityTable& t) {
  std::string out = join_csv(csv_header()) + "\n";
  for (const auto& r : t.rows) {
    std::vector<std::string> f{std::string(to_string(t.kind)), r.task, r.left, r.right, std::string(to_string(r.basis))};
    for (const auto& v : {r.rho, r.robust_rho, r.tau, r.j10, r.j20, r.precision10, r.recall10, r.sign_consistency,
                          r.mean_delta_abs_shap}) {
      f.push_back(csv_value(v));
    }
    for (const auto& c : {r.contrib_diag, r.contrib_prog}) {
      for (std::size_t i = 0; i < 5; ++i) f.push_back(c ? format_double(c->shares[i]) : std::string());
    }
    f.push_back(std::to_string(r.n_shared_features));
    f.push_back(std::to_string(r.j10_k));
    f.push_back(std::to_string(r.j20_k));
    out += join_csv(f) + "\n";
  }
  return out;
}

StabilityTable table_from_csv(std::string_view text) {
  const auto lines = text_lines(text);
  if (lines.empty()) throw ParseError("empty CSV report");
  const auto& header = csv_header();
  if (parse_csv_line(lines[0].second) != header) {
    throw ParseError(fmt::format("line {}: unexpected CSV header", lines[0].first));
  }
  StabilityTable t;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto [line, content] = lines[i];
    const auto f = parse_csv_line(content);
    if (f.size() != header.size()) {
      throw ParseError(fmt::format("line {}: expected {} fields, found {}", line, header.size(), f.size()));
    }
    t.kind = parse_table_kind(f[0]);
    StabilityRecord r;
    r.task = f[1];
    r.left = f[2];
    r.right = f[3];
    r.basis = parse_basis(f[4]);
    std::optional<double>* slots[] = {&r.rho, &r.robust_rho, &r.tau, &r.j10, &r.j20, &r.precision10, &r.recall10,
                                      &r.sign_consistency, &r.mean_delta_abs_shap};
    for (std::size_t k = 0; k < 9; ++k) *slots[k] = csv_parse(f[5 + k], line, header[5 + k]);
    std::optional<ContributionVector>* contribs[] = {&r.contrib_diag, &r.contrib_prog};
    for (std::size_t side = 0; side < 2; ++side) {
      const std::size_t base = 14 + 5 * side;
      bool any = false, all = true;
      ContributionVector cv;
      for (std::size_t s = 0; s < 5; ++s) {
        auto v = csv_parse(f[base + s], line, header[base + s]);
        any = any || v.has_value();
        all = all && v.has_value();
        if (v) cv.shares[s] = *v;
      }
      if (any && !all) throw ParseError(fmt::format("line {}, field {}: partial contribution vector", line, header[base]));
      if (all) *contribs[side] = cv;
    }
    r.n_shared_features = csv_count(f[24], line, header[24]);
    r.j10_k = csv_count(f[25], line, header[25]);
    r.j20_k = csv_count(f[26], line, header[26]);
    t.rows.push_back(std::move(r));
  }
  return t;
}

std::string table_to_json(const StabilityTable& t) {
  json rows = json::array();
  for (const auto& r : t.rows) {
    rows.push_back({{"task", r.task},
                    {"left", r.left},
                    {"right", r.right},
                    {"basis", std::string(to_string(r.basis))},
                    {"rho", opt_json(r.rho)},
                    {"robust_rho", opt_json(r.robust_rho)},
                    {"tau", opt_json(r.tau)},
                    {"j10", opt_json(r.j10)},
                    {"j20", opt_json(r.j20)},
                    {"precision10", opt_json(r.precision10)},
                    {"recall10", opt_json(r.recall10)},
                    {"sign_consistency", opt_json(r.sign_consistency)},
                    {"mean_delta_abs_shap", opt_json(r.mean_delta_abs_shap)},
                    {"contrib_diag", opt_json(r.contrib_diag)},
                    {"contrib_prog", opt_json(r.contrib_prog)},
                    {"n_shared_features", r.n_shared_features},
                    {"j10_k", r.j10_k},
                    {"j20_k", r.j20_k}});
  }
  json j{{"table", std::string(to_string(t.kind))}, {"rows", rows}};
  return j.dump(2) + "\n";
}

StabilityTable table_from_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    StabilityTable t;
    t.kind = parse_table_kind(j.at("table").get<std::string>());
    for (const auto& row : j.at("rows")) {
      StabilityRecord r;
      r.task = row.value("task", std::string());
      r.left = row.value("left", std::string());
      r.right = row.value("right", std::string());
      r.basis = parse_basis(row.at("basis").get<std::string>());
      r.rho = opt_double(row, "rho");
      r.robust_rho = opt_double(row, "robust_rho");
      r.tau = opt_double(row, "tau");
      r.j10 = opt_double(row, "j10");
      r.j20 = opt_double(row, "j20");
      r.precision10 = opt_double(row, "precision10");
      r.recall10 = opt_double(row, "recall10");
      r.sign_consistency = opt_double(row, "sign_consistency");
      r.mean_delta_abs_shap = opt_double(row, "mean_delta_abs_shap");
      r.contrib_diag = opt_contrib(row, "contrib_diag");
      r.contrib_prog = opt_contrib(row, "contrib_prog");
      r.n_shared_features = row.value("n_shared_features", std::size_t{0});
      r.j10_k = row.value("j10_k", std::size_t{0});
      r.j20_k = row.value("j20_k", std::size_t{0});
      t.rows.push_back(std::move(r));
    }
    return t;
  } catch (const json::exception& e) {
    throw ParseError(std::string("stability report: ") + e.what());
  }
}

std::string render(const StabilityTable& t, ReportFormat f) {
  switch (f) {
    case ReportFormat::Markdown: return table_to_markdown(t);
    case ReportFormat::Csv: return table_to_csv(t);
    case ReportFormat::Json: return table_to_json(t);
  }
  return {};
}

StabilityTable parse_table(std::string_view text, ReportFormat f) {
  switch (f) {
    case ReportFormat::Markdown: return table_from_markdown(text);
    case ReportFormat::Csv: return table_from_csv(text);
    case ReportFormat::Json: return table_from_json(text);
  }
  return {};
}

// ---- Performance tables ---------------------------------------------------

std::string performance_to_markdown(const std::vector<PerformanceRow>& rows) {
  std::string out = "# Best-model performance\n\n";
  out += md_row({"Classifier", "Task", "Algorithm", "Accuracy", "AUC", "Kappa", "Class", "Precision", "Recall",
                 "F1-score"});
  out += md_separator(10);
  for (const auto& r : rows) {
    const auto& m = r.metrics;
    for (std::size_t c = 0; c < m.per_label.size(); ++c) {
      const auto& pl = m.per_label[c];
      std::vector<std::string> cells(6);
      if (c == 0) {
        cells = {r.scenario, r.task, r.algorithm, cell(m.accuracy), cell(m.auc), cell(m.kappa)};
      }
      cells.insert(cells.end(), {label_cell(c, pl.label), cell(pl.precision), cell(pl.recall), cell(pl.f1)});
      out += md_row(cells);
    }
    out += md_row({"", "", "", "", "", "", "Macro avg", cell(m.macro_precision), cell(m.macro_recall),
                   cell(m.macro_f1)});
  }
  return out;
}

std::vector<PerformanceRow> performance_from_markdown(std::string_view text) {
  const auto rows = md_rows(text);
  if (rows.empty() || rows[0].cells.at(0) != "Classifier" || rows[0].cells.size() != 10) {
    throw ParseError("markdown performance table header not found");
  }
  std::vector<PerformanceRow> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    expect_cells(r, 10);
    auto required = [&](std::size_t c, std::string_view field) {
      auto v = parse_cell(r.cells[c], r.line, field);
      if (!v) throw ParseError(fmt::format("line {}, field {}: value required", r.line, field));
      return *v;
    };
    if (!r.cells[0].empty()) {
      PerformanceRow p;
      p.scenario = r.cells[0];
      p.task = r.cells[1];
      p.algorithm = r.cells[2];
      p.metrics.accuracy = required(3, "Accuracy");
      p.metrics.auc = parse_cell(r.cells[4], r.line, "AUC");
      p.metrics.kappa = required(5, "Kappa");
      out.push_back(std::move(p));
    }
    if (out.empty()) throw ParseError(fmt::format("line {}: class row before any classifier row", r.line));
    auto& m = out.back().metrics;
    if (r.cells[6] == "Macro avg") {
      m.macro_precision = required(7, "Precision");
      m.macro_recall = required(8, "Recall");
      m.macro_f1 = required(9, "F1-score");
    } else {
      m.per_label.push_back(PerLabelMetrics{label_from_cell(r.cells[6], r.line), required(7, "Precision"),
                                            required(8, "Recall"), required(9, "F1-score"), 0});
    }
  }
  return out;
}

namespace {
const std::vector<std::string> kPerfHeader{"scenario", "task",      "algorithm", "accuracy", "auc",    "kappa",
                                           "n",        "class",     "precision", "recall",   "f1",     "support"};
}

std::string performance_to_csv(const std::vector<PerformanceRow>& rows) {
  std::string out = join_csv(kPerfHeader) + "\n";
  for (const auto& r : rows) {
    const auto& m = r.metrics;
    const std::vector<std::string> lead{r.scenario, r.task, r.algorithm, format_double(m.accuracy), csv_value(m.auc),
                                        format_double(m.kappa), std::to_string(m.n)};
    for (const auto& pl : m.per_label) {
      auto f = lead;
      f.insert(f.end(), {std::string(to_string(pl.label)), format_double(pl.precision), format_double(pl.recall),
                         format_double(pl.f1), std::to_string(pl.support)});
      out += join_csv(f) + "\n";
    }
    auto f = lead;
    f.insert(f.end(), {"macro", format_double(m.macro_precision), format_double(m.macro_recall),
                       format_double(m.macro_f1), ""});
    out += join_csv(f) + "\n";
  }
  return out;
}

std::vector<PerformanceRow> performance_from_csv(std::string_view text) {
  const auto lines = text_lines(text);
  if (lines.empty() || parse_csv_line(lines[0].second) != kPerfHeader) {
    throw ParseError("line 1: unexpected performance CSV header");
  }
  std::vector<PerformanceRow> out;
  bool open = false;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto [line, content] = lines[i];
    const auto f = parse_csv_line(content);
    if (f.size() != kPerfHeader.size()) {
      throw ParseError(fmt::format("line {}: expected {} fields, found {}", line, kPerfHeader.size(), f.size()));
    }
    auto required = [&](std::size_t c) {
      auto v = csv_parse(f[c], line, kPerfHeader[c]);
      if (!v) throw ParseError(fmt::format("line {}, field {}: value required", line, kPerfHeader[c]));
      return *v;
    };
    if (!open) {
      PerformanceRow p;
      p.scenario = f[0];
      p.task = f[1];
      p.algorithm = f[2];
      p.metrics.accuracy = required(3);
      p.metrics.auc = csv_parse(f[4], line, "auc");
      p.metrics.kappa = required(5);
      p.metrics.n = csv_count(f[6], line, "n");
      out.push_back(std::move(p));
      open = true;
    }
    auto& m = out.back().metrics;
    if (f[7] == "macro") {
      m.macro_precision = required(8);
      m.macro_recall = required(9);
      m.macro_f1 = required(10);
      open = false;
    } else {
      m.per_label.push_back(PerLabelMetrics{parse_label(f[7]), required(8), required(9), required(10),
                                            csv_count(f[11], line, "support")});
    }
  }
  if (open) throw ParseError("performance CSV ends without a macro row");
  return out;
}

std::string performance_to_json(const std::vector<PerformanceRow>& rows) {
  json arr = json::array();
  for (const auto& r : rows) {
    arr.push_back({{"scenario", r.scenario},
                   {"task", r.task},
                   {"algorithm", r.algorithm},
                   {"metrics", json::parse(eval_metrics_to_json(r.metrics))}});
  }
  return json{{"rows", arr}}.dump(2) + "\n";
}

std::vector<PerformanceRow> performance_from_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    std::vector<PerformanceRow> out;
    for (const auto& r : j.at("rows")) {
      out.push_back(PerformanceRow{r.at("scenario").get<std::string>(), r.at("task").get<std::string>(),
                                   r.at("algorithm").get<std::string>(),
                                   eval_metrics_from_json(r.at("metrics").dump())});
    }
    return out;
  } catch (const json::exception& e) {
    throw ParseError(std::string("performance report: ") + e.what());
  }
}

std::string render(const std::vector<PerformanceRow>& rows, ReportFormat f) {
  switch (f) {
    case ReportFormat::Markdown: return performance_to_markdown(rows);
    case ReportFormat::Csv: return performance_to_csv(rows);
    case ReportFormat::Json: return performance_to_json(rows);
  }
  return {};
}

}  // namespace xstab
