#include "xstab/tabular.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>
#include <set>
#include <unordered_map>

#include <fmt/format.h>

#include "json.hpp"
#include "xstab/common.hpp"
#include "xstab/error.hpp"

namespace xstab {

using nlohmann::json;

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

struct SubjectVisitHash {
  std::size_t operator()(const std::pair<std::string, std::int32_t>& p) const {
    return std::hash<std::string>()(p.first) ^ (std::hash<std::int32_t>()(p.second) * 0x9e3779b97f4a7c15ULL);
  }
};

}  // namespace

std::string_view to_string(ClassLabel label) {
  switch (label) {
    case ClassLabel::NC: return "NC";
    case ClassLabel::MCI: return "MCI";
    case ClassLabel::AD: return "AD";
  }
  return "?";
}

ClassLabel parse_label(std::string_view s) {
  const std::string t = lower(trim(s));
  if (t == "nc" || t == "cn") return ClassLabel::NC;
  if (t == "mci") return ClassLabel::MCI;
  if (t == "ad") return ClassLabel::AD;
  throw ParseError(fmt::format("unknown class label '{}'", s));
}

std::string_view to_string(DomainTag tag) {
  switch (tag) {
    case DomainTag::Cognitive: return "cognitive";
    case DomainTag::Functional: return "functional";
    case DomainTag::Packet: return "packet";
    case DomainTag::Language: return "language";
    case DomainTag::Genetic: return "genetic";
    case DomainTag::Other: return "other";
  }
  return "other";
}

DomainTag parse_domain(std::string_view s) {
  const std::string t = lower(trim(s));
  if (t.empty() || t == "other") return DomainTag::Other;
  if (t == "cognitive" || t == "cdr") return DomainTag::Cognitive;
  if (t == "functional" || t == "faq") return DomainTag::Functional;
  if (t == "packet") return DomainTag::Packet;
  if (t == "language") return DomainTag::Language;
  if (t == "genetic") return DomainTag::Genetic;
  throw ParseError(fmt::format("unknown domain tag '{}'", s));
}

std::string_view to_string(Task task) {
  return task == Task::Diagnosis ? "diagnosis" : "prognosis";
}

Task parse_task(std::string_view s) {
  const std::string t = lower(trim(s));
  if (t == "diagnosis") return Task::Diagnosis;
  if (t == "prognosis") return Task::Prognosis;
  throw ParseError(fmt::format("unknown task '{}'", s));
}

std::size_t Column::size() const {
  return std::visit([](const auto& v) { return v.size(); }, cells);
}

bool Column::is_missing(std::size_t row) const {
  return std::visit([row](const auto& v) { return !v[row].has_value(); }, cells);
}

const Column* Dataset::find_column(std::string_view name) const {
  for (const auto& c : columns) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

std::vector<std::string> Dataset::subjects() const {
  std::vector<std::string> out;
  std::set<std::string_view> seen;
  for (const auto& s : subject_ids) {
    if (seen.insert(s).second) out.push_back(s);
  }
  return out;
}

Dataset Dataset::select_rows(std::span<const std::size_t> rows) const {
  Dataset out;
  out.columns.reserve(columns.size());
  for (const auto& c : columns) {
    Column nc{c.name, c.domain, {}};
    std::visit(
        [&](const auto& src) {
          std::decay_t<decltype(src)> dst;
          dst.reserve(rows.size());
          for (std::size_t r : rows) dst.push_back(src[r]);
          nc.cells = std::move(dst);
        },
        c.cells);
    out.columns.push_back(std::move(nc));
  }
  for (std::size_t r : rows) {
    out.subject_ids.push_back(subject_ids[r]);
    out.visit_index.push_back(visit_index[r]);
    out.visit_age_years.push_back(visit_age_years[r]);
    out.labels.push_back(labels[r]);
  }
  return out;
}

void Dataset::validate() const {
  const std::size_t n = n_rows();
  if (subject_ids.size() != n || visit_index.size() != n || visit_age_years.size() != n) {
    throw LoadError("dataset bookkeeping columns have inconsistent lengths");
  }
  for (const auto& c : columns) {
    if (c.size() != n) {
      throw LoadError(fmt::format("column '{}' has {} entries, expected {}", c.name, c.size(), n));
    }
    if (c.kind() == ColumnKind::Numeric) {
      for (const auto& cell : c.numeric()) {
        if (cell && !std::isfinite(*cell)) throw LoadError(fmt::format("column '{}' holds a non-finite value", c.name));
      }
    }
  }
  std::unordered_map<std::pair<std::string, std::int32_t>, std::size_t, SubjectVisitHash> seen;
  for (std::size_t i = 0; i < n; ++i) {
    if (visit_index[i] < 0) throw LoadError(fmt::format("row {} has a negative visit index", i));
    if (!(visit_age_years[i] >= 0.0)) throw LoadError(fmt::format("row {} has a negative or missing age", i));
    auto [it, inserted] = seen.emplace(std::make_pair(subject_ids[i], visit_index[i]), i);
    if (!inserted) {
      throw LoadError(fmt::format("duplicate (subject {}, visit {}) at rows {} and {}", subject_ids[i],
                                  visit_index[i], it->second, i));
    }
  }
  std::unordered_map<std::string, std::vector<std::size_t>> by_subject;
  for (std::size_t i = 0; i < n; ++i) by_subject[subject_ids[i]].push_back(i);
  for (auto& [subject, rows] : by_subject) {
    std::sort(rows.begin(), rows.end(), [&](std::size_t a, std::size_t b) { return visit_index[a] < visit_index[b]; });
    for (std::size_t k = 1; k < rows.size(); ++k) {
      if (visit_age_years[rows[k]] < visit_age_years[rows[k - 1]]) {
        throw LoadError(fmt::format("subject {}: age decreases between visits {} and {}", subject,
                                    visit_index[rows[k - 1]], visit_index[rows[k]]));
      }
    }
  }
}

Schema Schema::from_json_text(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("schema is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ParseError("schema must be a JSON object");
  Schema s;
  auto take = [&](const char* key, std::string& dst) {
    if (!j.contains(key) || !j[key].is_string()) throw ParseError(fmt::format("schema lacks string key '{}'", key));
    dst = j[key].get<std::string>();
  };
  take("subject_col", s.subject_col);
  take("visit_col", s.visit_col);
  take("age_col", s.age_col);
  take("label_col", s.label_col);
  for (const auto& [name, decl] : j.items()) {
    if (name == "subject_col" || name == "visit_col" || name == "age_col" || name == "label_col") continue;
    if (!decl.is_object()) throw ParseError(fmt::format("schema entry '{}' must be an object", name));
    ColumnSpec spec;
    const std::string kind = lower(decl.value("kind", "numeric"));
    if (kind == "numeric") {
      spec.kind = ColumnKind::Numeric;
    } else if (kind == "categorical") {
      spec.kind = ColumnKind::Categorical;
    } else {
      throw ParseError(fmt::format("schema entry '{}' has unknown kind '{}'", name, kind));
    }
    spec.domain = parse_domain(decl.value("domain", ""));
    s.columns.emplace(name, spec);
  }
  return s;
}

std::string Schema::to_json_text() const {
  json j = json::object();
  j["subject_col"] = subject_col;
  j["visit_col"] = visit_col;
  j["age_col"] = age_col;
  j["label_col"] = label_col;
  for (const auto& [name, spec] : columns) {
    j[name] = {{"kind", spec.kind == ColumnKind::Numeric ? "numeric" : "categorical"},
               {"domain", std::string(to_string(spec.domain))}};
  }
  return j.dump(2) + "\n";
}

Schema schema_of(const Dataset& d) {
  Schema s;
  for (const auto& c : d.columns) s.columns[c.name] = Schema::ColumnSpec{c.kind(), c.domain};
  return s;
}

Dataset parse_dataset(std::string_view csv_text, const Schema& schema) {
  std::vector<std::string> lines = split(csv_text, '\n');
  std::size_t first = 0;
  while (first < lines.size() && trim(lines[first]).empty()) ++first;
  if (first == lines.size()) throw LoadError("data file is empty");
  std::vector<std::string> header = parse_csv_line(lines[first]);
  for (auto& h : header) h = trim(h);
  if (!header.empty() && header[0].rfind("\xEF\xBB\xBF", 0) == 0) header[0].erase(0, 3);

  auto find = [&](const std::string& name) -> std::size_t {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw LoadError(fmt::format("column '{}' declared in schema is missing from data", name));
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t subject_at = find(schema.subject_col);
  const std::size_t visit_at = find(schema.visit_col);
  const std::size_t age_at = find(schema.age_col);
  const std::size_t label_at = find(schema.label_col);
  for (const auto& [name, spec] : schema.columns) find(name);

  Dataset d;
  std::vector<std::size_t> feature_at;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i == subject_at || i == visit_at || i == age_at || i == label_at) continue;
    auto it = schema.columns.find(header[i]);
    if (it == schema.columns.end()) {
      throw LoadError(fmt::format("data column '{}' is not declared in the schema", header[i]));
    }
    Column c{header[i], it->second.domain, {}};
    if (it->second.kind == ColumnKind::Numeric) {
      c.cells = NumericCells{};
    } else {
      c.cells = CategoricalCells{};
    }
    d.columns.push_back(std::move(c));
    feature_at.push_back(i);
  }

  std::unordered_map<std::pair<std::string, std::int32_t>, std::size_t, SubjectVisitHash> seen;
  for (std::size_t li = first + 1; li < lines.size(); ++li) {
    if (trim(lines[li]).empty()) continue;
    const std::size_t line_no = li + 1;
    std::vector<std::string> f = parse_csv_line(lines[li]);
    if (f.size() != header.size()) {
      throw LoadError(fmt::format("line {}: expected {} fields, found {}", line_no, header.size(), f.size()));
    }
    const std::string subject = trim(f[subject_at]);
    if (subject.empty()) continue;  // rows without a subject id are rejected
    double visit_d = 0.0;
    if (!parse_double(trim(f[visit_at]), visit_d) || visit_d < 0 || visit_d != std::floor(visit_d)) {
      throw LoadError(fmt::format("line {}: bad visit index '{}'", line_no, f[visit_at]));
    }
    double age = 0.0;
    if (!parse_double(trim(f[age_at]), age) || age < 0) {
      throw LoadError(fmt::format("line {}: bad age '{}'", line_no, f[age_at]));
    }
    ClassLabel label;
    try {
      label = parse_label(f[label_at]);
    } catch (const ParseError& e) {
      throw LoadError(fmt::format("line {}: {}", line_no, e.what()));
    }
    const auto visit = static_cast<std::int32_t>(visit_d);
    const std::size_t row = d.n_rows();
    auto [it, inserted] = seen.emplace(std::make_pair(subject, visit), row);
    if (!inserted) {
      throw LoadError(fmt::format("duplicate (subject {}, visit {}) at rows {} and {}", subject, visit, it->second,
                                  row));
    }
    d.subject_ids.push_back(subject);
    d.visit_index.push_back(visit);
    d.visit_age_years.push_back(age);
    d.labels.push_back(label);
    for (std::size_t c = 0; c < d.columns.size(); ++c) {
      const std::string cell = trim(f[feature_at[c]]);
      if (auto* num = std::get_if<NumericCells>(&d.columns[c].cells)) {
        double v = 0.0;
        if (!cell.empty() && parse_double(cell, v)) {
          num->push_back(v);
        } else {
          num->push_back(std::nullopt);
        }
      } else {
        auto& cat = std::get<CategoricalCells>(d.columns[c].cells);
        if (cell.empty()) {
          cat.push_back(std::nullopt);
        } else {
          cat.push_back(cell);
        }
      }
    }
  }
  d.validate();
  return d;
}

Dataset load_dataset(const std::filesystem::path& data_path, const std::filesystem::path& schema_path) {
  const Schema schema = Schema::from_json_text(read_file(schema_path));
  return parse_dataset(read_file(data_path), schema);
}

std::string dataset_to_csv(const Dataset& d, const Schema& schema) {
  std::string out;
  std::vector<std::string> header{schema.subject_col, schema.visit_col, schema.age_col, schema.label_col};
  for (const auto& c : d.columns) header.push_back(c.name);
  out += join_csv(header) + "\n";
  std::vector<std::string> row;
  for (std::size_t i = 0; i < d.n_rows(); ++i) {
    row.clear();
    row.push_back(d.subject_ids[i]);
    row.push_back(std::to_string(d.visit_index[i]));
    row.push_back(format_double(d.visit_age_years[i]));
    row.emplace_back(to_string(d.labels[i]));
    for (const auto& c : d.columns) {
      if (c.kind() == ColumnKind::Numeric) {
        const auto& cell = c.numeric()[i];
        row.push_back(cell ? format_double(*cell) : std::string());
      } else {
        const auto& cell = c.categorical()[i];
        row.push_back(cell ? *cell : std::string());
      }
    }
    out += join_csv(row) + "\n";
  }
  return out;
}

void write_dataset(const Dataset& d, const std::filesystem::path& data_path,
                   const std::filesystem::path& schema_path) {
  const Schema schema = schema_of(d);
  write_file(data_path, dataset_to_csv(d, schema));
  write_file(schema_path, schema.to_json_text());
}

std::string ScenarioSpec::name() const {
  std::string out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (i) out += " vs ";
    out += to_string(labels[i]);
  }
  return out;
}

std::string ScenarioSpec::key() const {
  std::string out(to_string(task));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    out += i ? "_vs_" : "_";
    out += to_string(labels[i]);
  }
  return out;
}

void ScenarioSpec::validate() const {
  if (labels.size() != 2 && labels.size() != 3) {
    throw ConfigError(fmt::format("scenario needs 2 or 3 labels, got {}", labels.size()));
  }
  for (std::size_t i = 1; i < labels.size(); ++i) {
    if (ordinal(labels[i]) <= ordinal(labels[i - 1])) {
      throw ConfigError("scenario labels must be distinct and listed in progression order");
    }
  }
  if (task == Task::Prognosis && !(horizon_years > 0.0)) {
    throw ConfigError("prognosis scenario needs a positive horizon");
  }
}

std::vector<ScenarioSpec> default_scenarios() {
  using L = ClassLabel;
  const std::vector<std::vector<L>> sets{{L::NC, L::AD}, {L::NC, L::MCI}, {L::MCI, L::AD}, {L::NC, L::MCI, L::AD}};
  std::vector<ScenarioSpec> out;
  for (Task t : {Task::Diagnosis, Task::Prognosis}) {
    for (const auto& s : sets) out.push_back(ScenarioSpec{t, s, 4.0});
  }
  return out;
}

Dataset select_scenario(const Dataset& d, const ScenarioSpec& s) {
  s.validate();
  auto wanted = [&](ClassLabel l) { return std::find(s.labels.begin(), s.labels.end(), l) != s.labels.end(); };

  if (s.task == Task::Diagnosis) {
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < d.n_rows(); ++i) {
      if (wanted(d.labels[i])) keep.push_back(i);
    }
    return d.select_rows(keep);
  }

  std::unordered_map<std::string, std::vector<std::size_t>> by_subject;
  for (std::size_t i = 0; i < d.n_rows(); ++i) by_subject[d.subject_ids[i]].push_back(i);

  std::vector<std::size_t> baseline_rows;
  std::vector<ClassLabel> future_labels;
  for (const auto& subject : d.subjects()) {
    const auto& rows = by_subject[subject];
    if (rows.size() < 2) continue;
    const std::size_t base =
        *std::min_element(rows.begin(), rows.end(), [&](std::size_t a, std::size_t b) {
          return d.visit_index[a] < d.visit_index[b];
        });
    const double target = d.visit_age_years[base] + s.horizon_years;
    std::optional<std::size_t> best;
    double best_gap = std::numeric_limits<double>::infinity();
    for (std::size_t r : rows) {
      if (r == base) continue;
      const double gap = std::abs(d.visit_age_years[r] - target);
      if (gap > 1.0) continue;
      if (gap < best_gap || (gap == best_gap && d.visit_index[r] < d.visit_index[*best])) {
        best = r;
        best_gap = gap;
      }
    }
    if (!best || !wanted(d.labels[*best])) continue;
    baseline_rows.push_back(base);
    future_labels.push_back(d.labels[*best]);
  }
  if (baseline_rows.empty()) {
    throw ScenarioError(fmt::format("prognosis scenario {} has no subject with a follow-up visit near {} years",
                                    s.name(), s.horizon_years));
  }
  Dataset out = d.select_rows(baseline_rows);
  out.labels = std::move(future_labels);
  return out;
}

}  // namespace xstab
