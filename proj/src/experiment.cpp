#include "xstab/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <set>

#include <fmt/format.h>

#include "json.hpp"
#include "xstab/common.hpp"
#include "xstab/error.hpp"

namespace xstab {

using nlohmann::json;
namespace fs = std::filesystem;

std::string task_title(Task t) { return t == Task::Diagnosis ? "Diagnosis" : "Prognosis"; }

bool Reports::has_undefined() const {
  return within.has_undefined() || cross_scenario.has_undefined() || cross_task.has_undefined();
}

// ---- Config file -------------------------------------------------------------

namespace {

void check_keys(const json& j, std::initializer_list<const char*> allowed, std::string_view where) {
  if (!j.is_object()) throw ConfigError(fmt::format("{}: expected a JSON object", where));
  for (const auto& [key, _] : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      throw ConfigError(fmt::format("{}: unknown key '{}'", where, key));
    }
  }
}

json candidate_json(const CandidateSpec& c) {
  return {{"family", c.family == ModelFamily::Tree ? "tree" : "forest"},
          {"max_depth", c.tree.max_depth},
          {"min_leaf", c.tree.min_leaf},
          {"n_trees", c.n_trees},
          {"feature_fraction", c.feature_fraction},
          {"bootstrap", c.bootstrap}};
}

CandidateSpec candidate_from(const json& j) {
  check_keys(j, {"family", "max_depth", "min_leaf", "n_trees", "feature_fraction", "bootstrap"}, "candidate");
  CandidateSpec c;
  const auto family = j.value("family", std::string("tree"));
  if (family == "tree") {
    c.family = ModelFamily::Tree;
    c.bootstrap = false;
  } else if (family == "forest") {
    c.family = ModelFamily::Forest;
    c.n_trees = 25;
  } else {
    throw ConfigError(fmt::format("candidate: unknown family '{}'", family));
  }
  c.tree.max_depth = j.value("max_depth", c.tree.max_depth);
  c.tree.min_leaf = j.value("min_leaf", c.tree.min_leaf);
  c.n_trees = j.value("n_trees", c.n_trees);
  c.feature_fraction = j.value("feature_fraction", c.feature_fraction);
  c.bootstrap = j.value("bootstrap", c.bootstrap);
  return c;
}

json scenario_json(const ScenarioSpec& s) {
  std::vector<std::string> labels;
  for (auto l : s.labels) labels.emplace_back(to_string(l));
  return {{"task", std::string(to_string(s.task))}, {"labels", labels}, {"horizon_years", s.horizon_years}};
}

ScenarioSpec scenario_from(const json& j) {
  check_keys(j, {"task", "labels", "horizon_years"}, "scenario");
  ScenarioSpec s;
  s.task = parse_task(j.at("task").get<std::string>());
  for (const auto& l : j.at("labels")) s.labels.push_back(parse_label(l.get<std::string>()));
  s.horizon_years = j.value("horizon_years", s.horizon_years);
  return s;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (synthetic) {
    synthetic->validate();
  } else if (data_path.empty() || schema_path.empty()) {
    throw ConfigError("config needs either a synthetic section or both dataset and schema paths");
  }
  if (scenarios.empty()) throw ConfigError("config lists no scenarios");
  std::set<std::string> keys;
  for (const auto& s : scenarios) {
    s.validate();
    if (!keys.insert(s.key()).second) throw ConfigError(fmt::format("scenario {} listed twice", s.key()));
  }
  preprocess.validate();
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ConfigError("test_fraction must lie in (0, 1)");
  if (folds < 2) throw ConfigError("folds must be at least 2");
  if (candidates.empty()) throw ConfigError("config lists no model candidates");
  for (const auto& c : candidates) {
    if (c.tree.max_depth < 1 || c.tree.min_leaf < 1) throw ConfigError("candidate depth and min_leaf must be >= 1");
    if (c.family == ModelFamily::Forest && c.n_trees < 1) throw ConfigError("forest candidates need >= 1 tree");
    if (!(c.feature_fraction > 0.0 && c.feature_fraction <= 1.0)) {
      throw ConfigError("candidate feature_fraction must lie in (0, 1]");
    }
  }
  if (shap.method != "auto" && shap.method != "exact" && shap.method != "sampled") {
    throw ConfigError(fmt::format("shap.method '{}' is not auto, exact or sampled", shap.method));
  }
  if (shap.n_permutations < 1 || shap.background_rows < 1) {
    throw ConfigError("shap.n_permutations and shap.background_rows must be >= 1");
  }
  if (shap.exact_max_features > kMaxExactFeatures) {
    throw ConfigError(fmt::format("shap.exact_max_features cannot exceed {}", kMaxExactFeatures));
  }
  if (fi_repeats < 1) throw ConfigError("fi_repeats must be >= 1");
  plot.validate();
}

std::string ExperimentConfig::to_json_text(bool include_runtime) const {
  json j;
  j["seed"] = seed;
  if (synthetic) {
    j["data"] = {{"synthetic", json::parse(synthetic->to_json_text())}};
  } else {
    j["data"] = {{"dataset", data_path}, {"schema", schema_path}};
  }
  json sc = json::array();
  for (const auto& s : scenarios) sc.push_back(scenario_json(s));
  j["scenarios"] = sc;
  j["preprocess"] = {{"missing_threshold", preprocess.missing_threshold},
                     {"cardinality_threshold", preprocess.cardinality_threshold}};
  j["test_fraction"] = test_fraction;
  j["folds"] = folds;
  j["smote_k"] = smote_k;
  json cands = json::array();
  for (const auto& c : candidates) cands.push_back(candidate_json(c));
  j["candidates"] = cands;
  j["shap"] = {{"method", shap.method},
               {"exact_max_features", shap.exact_max_features},
               {"n_permutations", shap.n_permutations},
               {"background_rows", shap.background_rows},
               {"correct_additivity", shap.correct_additivity}};
  j["fi_repeats"] = fi_repeats;
  j["plot"] = {{"top_n", plot.top_n},
               {"width", plot.width},
               {"row_height", plot.row_height},
               {"low_color", plot.low_color},
               {"high_color", plot.high_color}};
  if (include_runtime) {
    j["jobs"] = jobs;
    j["output_dir"] = output_dir;
  }
  return j.dump(2) + "\n";
}

ExperimentConfig ExperimentConfig::from_json_text(std::string_view text) {
  try {
    const json j = json::parse(text);
    check_keys(j, {"seed", "data", "scenarios", "preprocess", "test_fraction", "folds", "smote_k", "candidates", "shap",
                   "fi_repeats", "plot", "jobs", "output_dir"},
               "experiment config");
    ExperimentConfig c;
    c.seed = j.value("seed", c.seed);
    if (j.contains("data")) {
      const auto& d = j.at("data");
      check_keys(d, {"synthetic", "dataset", "schema"}, "data");
      if (d.contains("synthetic")) {
        c.synthetic = SynthConfig::from_json_text(d.at("synthetic").dump());
      } else {
        c.synthetic.reset();
        c.data_path = d.at("dataset").get<std::string>();
        c.schema_path = d.at("schema").get<std::string>();
      }
    }
    if (j.contains("scenarios")) {
      c.scenarios.clear();
      for (const auto& s : j.at("scenarios")) c.scenarios.push_back(scenario_from(s));
    }
    if (j.contains("preprocess")) {
      const auto& p = j.at("preprocess");
      check_keys(p, {"missing_threshold", "cardinality_threshold"}, "preprocess");
      c.preprocess.missing_threshold = p.value("missing_threshold", c.preprocess.missing_threshold);
      c.preprocess.cardinality_threshold = p.value("cardinality_threshold", c.preprocess.cardinality_threshold);
    }
    c.test_fraction = j.value("test_fraction", c.test_fraction);
    c.folds = j.value("folds", c.folds);
    c.smote_k = j.value("smote_k", c.smote_k);
    if (j.contains("candidates")) {
      c.candidates.clear();
      for (const auto& cj : j.at("candidates")) c.candidates.push_back(candidate_from(cj));
    }
    if (j.contains("shap")) {
      const auto& s = j.at("shap");
      check_keys(s, {"method", "exact_max_features", "n_permutations", "background_rows", "correct_additivity"},
                 "shap");
      c.shap.method = s.value("method", c.shap.method);
      c.shap.exact_max_features = s.value("exact_max_features", c.shap.exact_max_features);
      c.shap.n_permutations = s.value("n_permutations", c.shap.n_permutations);
      c.shap.background_rows = s.value("background_rows", c.shap.background_rows);
      c.shap.correct_additivity = s.value("correct_additivity", c.shap.correct_additivity);
    }
    c.fi_repeats = j.value("fi_repeats", c.fi_repeats);
    if (j.contains("plot")) {
      const auto& p = j.at("plot");
      check_keys(p, {"top_n", "width", "row_height", "low_color", "high_color"}, "plot");
      c.plot.top_n = p.value("top_n", c.plot.top_n);
      c.plot.width = p.value("width", c.plot.width);
      c.plot.row_height = p.value("row_height", c.plot.row_height);
      c.plot.low_color = p.value("low_color", c.plot.low_color);
      c.plot.high_color = p.value("high_color", c.plot.high_color);
    }
    c.jobs = j.value("jobs", c.jobs);
    c.output_dir = j.value("output_dir", c.output_dir);
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("experiment config: ") + e.what());
  }
}

bool same_settings(const ExperimentConfig& a, const ExperimentConfig& b) {
  return a.to_json_text(true) == b.to_json_text(true);
}

// ---- Manifest ---------------------------------------------------------------------

std::string manifest_to_json(const std::vector<ManifestEntry>& entries, bool complete, const std::string& error) {
  auto sorted = entries;
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.path < b.path; });
  json files = json::array();
  for (const auto& e : sorted) {
    files.push_back({{"path", e.path}, {"sha256", e.sha256}, {"kind", e.kind}, {"bytes", e.bytes}});
  }
  json j{{"complete", complete}, {"files", files}};
  if (!error.empty()) j["error"] = error;
  return j.dump(2) + "\n";
}

std::vector<ManifestEntry> manifest_from_json(std::string_view text, bool* complete) {
  try {
    const json j = json::parse(text);
    if (complete) *complete = j.at("complete").get<bool>();
    std::vector<ManifestEntry> out;
    for (const auto& f : j.at("files")) {
      out.push_back({f.at("path").get<std::string>(), f.at("sha256").get<std::string>(),
                     f.at("kind").get<std::string>(), f.at("bytes").get<std::size_t>()});
    }
    return out;
  } catch (const json::exception& e) {
    throw ParseError(std::string("manifest: ") + e.what());
  }
}

// ---- Loading helpers -----------------------------------------------------------

ImportanceVector load_importance(const fs::path& path) {
  const std::string text = read_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(fmt::format("{}: {}", path.string(), e.what()));
  }
  try {
    if (j.is_object() && (j.contains("values") || j.contains("explanations"))) {
      const AttributionFile f = attributions_from_json(text);
      ImportanceVector v = summarize(std::span<const AttributionMatrix>(f.explanations));
      v.task = f.task;
      v.scenario = f.scenario;
      return v;
    }
    return importance_from_json(text);
  } catch (const Error& e) {
    throw ParseError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

DomainMap load_domain_map(const fs::path& path, const std::vector<std::string>& features) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw ParseError(fmt::format("{}: {}", path.string(), e.what()));
  }
  if (!j.is_object()) throw ParseError(fmt::format("{}: expected a JSON object", path.string()));
  std::map<std::string, DomainTag> by_name;
  for (const auto& [key, value] : j.items()) {
    if (value.is_string()) {
      // Plain feature -> domain file; schema bookkeeping keys are skipped.
      if (key == "subject_col" || key == "visit_col" || key == "age_col" || key == "label_col") continue;
      by_name[key] = parse_domain(value.get<std::string>());
    } else if (value.is_object()) {
      by_name[key] = parse_domain(value.value("domain", std::string()));
    }
  }
  DomainMap out;
  for (const auto& f : features) {
    if (auto it = by_name.find(f); it != by_name.end()) {
      out[f] = it->second;
      continue;
    }
    std::string source;
    for (const char* prefix : {"scaler_", "freq_"}) {
      if (f.rfind(prefix, 0) == 0 && by_name.count(f.substr(std::string_view(prefix).size()))) {
        source = f.substr(std::string_view(prefix).size());
      }
    }
    if (source.empty() && f.rfind("ohe_", 0) == 0) {
      // Longest column name that prefixes the encoded name wins.
      for (const auto& [name, _] : by_name) {
        if (f.size() > 5 + name.size() && f.compare(4, name.size(), name) == 0 && f[4 + name.size()] == '_' &&
            name.size() > source.size()) {
          source = name;
        }
      }
    }
    if (!source.empty()) out[f] = by_name[source];
  }
  return out;
}

// ---- Reports ------------------------------------------------------------------

namespace {

struct ArchivedScenario {
  ScenarioSpec spec;
  ImportanceVector fi;
  ImportanceVector shap;
  DomainMap domains;
  EvalMetrics metrics;
  std::string algorithm;
};

ArchivedScenario load_archived(const fs::path& bundle, const ScenarioSpec& spec) {
  const fs::path dir = bundle / "scenarios" / spec.key();
  if (!fs::is_directory(dir)) throw IoError(fmt::format("bundle has no results for scenario {}", spec.key()));
  ArchivedScenario a;
  a.spec = spec;
  a.fi = importance_from_json(read_file(dir / "fi.json"));
  a.shap = load_importance(dir / "shap.json");
  const json domains = json::parse(read_file(dir / "domains.json"));
  for (const auto& [k, v] : domains.items()) {
    a.domains[k] = parse_domain(v.get<std::string>());
  }
  a.metrics = eval_metrics_from_json(read_file(dir / "metrics.json"));
  a.algorithm = json::parse(read_file(dir / "selection.json")).at("winner").get<std::string>();
  return a;
}

}  // namespace

Reports reports_from_bundle(const fs::path& bundle) {
  const ExperimentConfig cfg = ExperimentConfig::from_json_text(read_file(bundle / "config.json"));
  std::vector<ArchivedScenario> archived;
  for (const auto& s : cfg.scenarios) archived.push_back(load_archived(bundle, s));

  Reports r;
  for (const auto& a : archived) {
    StabilityRecord rec = within_model_analysis(a.fi, a.shap);
    rec.left = a.spec.name();
    rec.task = task_title(a.spec.task);
    r.within.rows.push_back(std::move(rec));
    r.performance.push_back({a.spec.name(), task_title(a.spec.task), a.algorithm, a.metrics});
  }
  for (Task task : {Task::Diagnosis, Task::Prognosis}) {
    for (std::size_t i = 0; i < archived.size(); ++i) {
      if (archived[i].spec.task != task) continue;
      for (std::size_t j = i + 1; j < archived.size(); ++j) {
        if (archived[j].spec.task != task) continue;
        StabilityRecord rec = cross_scenario_analysis(archived[i].shap, archived[j].shap);
        rec.task = task_title(task);
        rec.left = archived[i].spec.name();
        rec.right = archived[j].spec.name();
        r.cross_scenario.rows.push_back(std::move(rec));
      }
    }
  }
  for (const auto& d : archived) {
    if (d.spec.task != Task::Diagnosis) continue;
    for (const auto& p : archived) {
      if (p.spec.task != Task::Prognosis || p.spec.labels != d.spec.labels) continue;
      DomainMap domains = d.domains;
      domains.insert(p.domains.begin(), p.domains.end());
      CrossTaskRecord rec = cross_task_analysis(d.fi, d.shap, p.fi, p.shap, domains);
      rec.fi.left = rec.shap.left = d.spec.name();
      r.cross_task.rows.push_back(std::move(rec.fi));
      r.cross_task.rows.push_back(std::move(rec.shap));
    }
  }
  return r;
}

std::vector<std::string> write_reports(const Reports& r, const fs::path& root) {
  std::vector<std::string> written;
  for (ReportFormat f : {ReportFormat::Markdown, ReportFormat::Csv, ReportFormat::Json}) {
    for (const StabilityTable* t : {&r.within, &r.cross_scenario, &r.cross_task}) {
      const std::string rel = fmt::format("reports/{}.{}", to_string(t->kind), extension(f));
      write_file(root / rel, render(*t, f));
      written.push_back(rel);
    }
    const std::string rel = fmt::format("reports/performance.{}", extension(f));
    write_file(root / rel, render(r.performance, f));
    written.push_back(rel);
  }
  return written;
}

// ---- Pipeline -------------------------------------------------------------------

namespace {

class BundleWriter {
 public:
  explicit BundleWriter(fs::path root) : root_(std::move(root)) {}

  void write(const std::string& rel, std::string_view content, const std::string& kind) {
    write_file(root_ / rel, content);
    record(rel, kind);
  }
  void record(const std::string& rel, const std::string& kind) {
    const std::string content = read_file(root_ / rel);
    entries_.push_back({rel, sha256_hex(content), kind, content.size()});
  }
  void finish(bool complete, const std::string& error = {}) {
    write_file(root_ / "manifest.json", manifest_to_json(entries_, complete, error));
  }
  const std::vector<ManifestEntry>& entries() const { return entries_; }

 private:
  fs::path root_;
  std::vector<ManifestEntry> entries_;
};

template <typename F>
auto stage(const ScenarioSpec& s, std::string_view name, F&& body) {
  try {
    return body();
  } catch (const std::exception& e) {
    throw Error(fmt::format("scenario {} ({}), stage {}: {}", s.name(), to_string(s.task), name, e.what()));
  }
}

std::vector<std::size_t> rows_of(const Dataset& d, const std::set<std::string>& subjects) {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < d.n_rows(); ++i) {
    if (subjects.count(d.subject_ids[i])) rows.push_back(i);
  }
  return rows;
}

LeakageAudit audit_split(const SplitPlan& plan, const FeatureMatrix& train, const FeatureMatrix& test) {
  LeakageAudit a;
  const std::set<std::string> tr(plan.train_subjects.begin(), plan.train_subjects.end());
  const std::set<std::string> te(plan.test_subjects.begin(), plan.test_subjects.end());
  const std::set<std::string> tr_rows(train.subject_ids.begin(), train.subject_ids.end());
  a.train_test_disjoint = std::none_of(te.begin(), te.end(), [&](const auto& s) { return tr.count(s); }) &&
                          std::none_of(test.subject_ids.begin(), test.subject_ids.end(),
                                       [&](const auto& s) { return tr_rows.count(s); });
  std::set<std::string> seen;
  std::size_t total = 0;
  for (const auto& f : plan.folds) {
    total += f.validation_subjects.size();
    seen.insert(f.validation_subjects.begin(), f.validation_subjects.end());
  }
  a.folds_disjoint = total == seen.size();
  a.folds_cover_train = seen == tr;
  a.synthetic_in_test = test.synthetic_count();
  return a;
}

json selection_json(const SelectionResult& sel, const LeakageAudit& audit, const std::string& shap_method,
                    std::size_t n_train_subjects, std::size_t n_test_subjects, const FeatureMatrix& train,
                    const FeatureMatrix& test) {
  json cands = json::array();
  for (std::size_t c = 0; c < sel.candidates.size(); ++c) {
    cands.push_back({{"candidate", sel.candidates[c].describe()}, {"cv_accuracy", sel.cv_accuracy[c]}});
  }
  return {{"candidates", cands},
          {"winner", sel.candidates[sel.winner_index].describe()},
          {"winner_index", sel.winner_index},
          {"shap_method", shap_method},
          {"n_features", train.n_features()},
          {"n_train_rows", train.n_rows()},
          {"n_test_rows", test.n_rows()},
          {"n_train_subjects", n_train_subjects},
          {"n_test_subjects", n_test_subjects},
          {"audit",
           {{"train_test_disjoint", audit.train_test_disjoint},
            {"folds_disjoint", audit.folds_disjoint},
            {"folds_cover_train", audit.folds_cover_train},
            {"synthetic_in_validation", audit.synthetic_in_validation},
            {"synthetic_in_test", audit.synthetic_in_test},
            {"synthetic_in_final_training", audit.synthetic_in_final_training}}}};
}

ScenarioOutcome run_scenario(const ExperimentConfig& cfg, const Dataset& data, const ScenarioSpec& spec,
                             BundleWriter& out) {
  const std::uint64_t h = hash_string(spec.key());
  const std::string dir = "scenarios/" + spec.key() + "/";
  ScenarioOutcome o;
  o.spec = spec;

  const Dataset scen = stage(spec, "select", [&] { return select_scenario(data, spec); });
  SplitPlan plan = stage(spec, "split", [&] { return subject_split(scen, cfg.test_fraction, derive_seed(cfg.seed, {h, 1})); });
  const std::set<std::string> train_set(plan.train_subjects.begin(), plan.train_subjects.end());
  const std::set<std::string> test_set(plan.test_subjects.begin(), plan.test_subjects.end());
  const Dataset train_ds = scen.select_rows(rows_of(scen, train_set));
  const Dataset test_ds = scen.select_rows(rows_of(scen, test_set));

  FeatureMatrix train, test;
  FittedPreprocessor prep = stage(spec, "preprocess", [&] {
    auto p = fit_preprocessor(train_ds, cfg.preprocess);
    train = apply_preprocessor(p, train_ds);
    test = apply_preprocessor(p, test_ds);
    return p;
  });
  train.classes = test.classes = spec.labels;

  plan.folds = stage(spec, "cross-validation", [&] {
    const std::size_t k = std::min(cfg.folds, plan.train_subjects.size());
    return kfold_subjects(plan.train_subjects, k, derive_seed(cfg.seed, {h, 2}));
  });
  SelectionResult sel = stage(spec, "model selection", [&] {
    return select_best_model(train, cfg.candidates, plan.folds, derive_seed(cfg.seed, {h, 3}),
                             SelectionOptions{cfg.smote_k, cfg.jobs});
  });
  const Predictor& model = *sel.winner;
  o.algorithm = sel.candidates[sel.winner_index].describe();
  o.test_metrics = stage(spec, "evaluation", [&] { return evaluate(model, test); });

  ImportanceVector fi = stage(spec, "feature importance", [&] {
    return permutation_importance(model, test, cfg.fi_repeats, derive_seed(cfg.seed, {h, 4}));
  });
  fi.task = std::string(to_string(spec.task));
  fi.scenario = spec.name();

  ShapMethod method = ShapMethod::exact();
  const bool exact = cfg.shap.method == "exact" ||
                     (cfg.shap.method == "auto" && train.n_features() <= cfg.shap.exact_max_features);
  if (!exact) {
    method = ShapMethod::sampled_with(cfg.shap.n_permutations, derive_seed(cfg.seed, {h, 6}),
                                      cfg.shap.correct_additivity);
  }
  o.shap_method = method.describe();
  AttributionFile shap{std::string(to_string(spec.task)), spec.name(), {}};
  shap.explanations = stage(spec, "shap", [&] {
    const BackgroundSet bg = make_background(train, cfg.shap.background_rows, derive_seed(cfg.seed, {h, 5}));
    return explain_default_targets(model, test, bg, method, cfg.jobs);
  });

  o.audit = audit_split(plan, train, test);
  o.audit.synthetic_in_validation = sel.synthetic_rows_in_validation;
  o.audit.synthetic_in_final_training = sel.synthetic_rows_in_final_training;
  o.n_features = train.n_features();
  o.n_train_rows = train.n_rows();
  o.n_test_rows = test.n_rows();

  stage(spec, "write", [&] {
    json domains = json::object();
    for (std::size_t j = 0; j < prep.output_feature_names.size(); ++j) {
      domains[prep.output_feature_names[j]] = std::string(to_string(prep.output_domains[j]));
    }
    out.write(dir + "model.json", model_to_json(model), "model");
    out.write(dir + "metrics.json", eval_metrics_to_json(o.test_metrics), "metrics");
    out.write(dir + "fi.json", importance_to_json(fi), "fi");
    out.write(dir + "shap.json", attributions_to_json(shap), "attributions");
    out.write(dir + "test_matrix.csv", feature_matrix_to_csv(test), "test_matrix");
    out.write(dir + "domains.json", domains.dump(2) + "\n", "domains");
    out.write(dir + "selection.json",
              selection_json(sel, o.audit, o.shap_method, plan.train_subjects.size(), plan.test_subjects.size(),
                             train, test)
                      .dump(2) +
                  "\n",
              "selection");
    out.write(dir + "fi_bar.svg", emit_fi_bar(fi, cfg.plot), "plot");
    if (shap.explanations.size() == 1) {
      out.write(dir + "shap_beeswarm.svg", emit_beeswarm(shap.explanations[0], test, cfg.plot), "plot");
    } else {
      for (const auto& a : shap.explanations) {
        out.write(fmt::format("{}shap_beeswarm_{}.svg", dir, to_string(a.target)), emit_beeswarm(a, test, cfg.plot),
                  "plot");
      }
    }
    return 0;
  });
  return o;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, const ProgressFn& progress) {
  cfg.validate();
  ExperimentResult result;
  result.bundle = cfg.output_dir;
  BundleWriter out(result.bundle);
  auto say = [&](const std::string& msg) {
    if (progress) progress(msg);
  };
  try {
    out.write("config.json", cfg.to_json_text(false), "config");
    Dataset data;
    if (cfg.synthetic) {
      data = generate_synthetic(*cfg.synthetic);
      const Schema schema = schema_of(data);
      out.write("data/dataset.csv", dataset_to_csv(data, schema), "dataset");
      out.write("data/schema.json", schema.to_json_text(), "schema");
    } else {
      data = load_dataset(cfg.data_path, cfg.schema_path);
    }
    say(fmt::format("dataset: {} rows, {} subjects", data.n_rows(), data.subjects().size()));
    for (const auto& spec : cfg.scenarios) {
      const auto start = std::chrono::steady_clock::now();
      result.scenarios.push_back(run_scenario(cfg, data, spec, out));
      const auto& o = result.scenarios.back();
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      say(fmt::format("{} {}: {} | accuracy {} | {} test rows | {:.1f}s", task_title(spec.task), spec.name(),
                      o.algorithm, format_fixed(o.test_metrics.accuracy, 3), o.n_test_rows, secs));
    }
    result.reports = reports_from_bundle(result.bundle);
    for (const auto& rel : write_reports(result.reports, result.bundle)) out.record(rel, "report");
  } catch (const std::exception& e) {
    out.finish(false, e.what());
    throw;
  }
  out.finish(true);
  result.manifest = out.entries();
  std::sort(result.manifest.begin(), result.manifest.end(), [](const auto& a, const auto& b) { return a.path < b.path; });
  return result;
}

}  // namespace xstab
