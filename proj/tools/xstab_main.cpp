// xstab command-line front end: synth, run, compare, plot.
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "xstab/common.hpp"
#include "xstab/error.hpp"
#include "xstab/experiment.hpp"
#include "xstab/plots.hpp"
#include "xstab/report.hpp"

namespace fs = std::filesystem;
using namespace xstab;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitDegenerate = 2;

struct Globals {
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string format = "md";
  std::optional<std::size_t> jobs;
};

std::string label_of(const ImportanceVector& v, const std::string& path) {
  return v.scenario.empty() ? fs::path(path).stem().string() : v.scenario;
}

std::string task_of(const ImportanceVector& v) {
  if (v.task.empty()) return "";
  try {
    return task_title(parse_task(v.task));
  } catch (const ParseError&) {
    return v.task;
  }
}

int emit_table(const StabilityTable& t, const Globals& g) {
  const ReportFormat f = parse_format(g.format);
  std::cout << render(t, f);
  if (!g.out.empty()) {
    for (ReportFormat each : {ReportFormat::Markdown, ReportFormat::Csv, ReportFormat::Json}) {
      write_file(fs::path(g.out) / fmt::format("{}.{}", to_string(t.kind), extension(each)), render(t, each));
    }
  }
  if (t.has_undefined()) {
    std::cerr << "warning: some metrics are undefined for these inputs (shown as n/a)\n";
    return kExitDegenerate;
  }
  return kExitOk;
}

int cmd_synth(const Globals& g, const std::string& config_path) {
  SynthConfig cfg = config_path.empty() ? SynthConfig{} : SynthConfig::from_json_text(read_file(config_path));
  if (g.seed) cfg.seed = *g.seed;
  cfg.validate();
  const fs::path out = g.out.empty() ? fs::path("synth") : fs::path(g.out);
  const Dataset d = generate_synthetic(cfg);
  write_dataset(d, out / "dataset.csv", out / "schema.json");
  std::cout << fmt::format("wrote {} rows for {} subjects to {}\n", d.n_rows(), d.subjects().size(),
                           (out / "dataset.csv").string());
  return kExitOk;
}

int cmd_run(const Globals& g, const std::string& config_path) {
  ExperimentConfig cfg =
      config_path.empty() ? ExperimentConfig{} : ExperimentConfig::from_json_text(read_file(config_path));
  if (g.seed) {
    cfg.seed = *g.seed;
    if (cfg.synthetic) cfg.synthetic->seed = *g.seed;
  }
  if (!g.out.empty()) cfg.output_dir = g.out;
  if (g.jobs) cfg.jobs = *g.jobs;
  const ReportFormat f = parse_format(g.format);
  const ExperimentResult r = run_experiment(cfg, [](const std::string& msg) { std::cerr << msg << "\n"; });
  std::cout << render(r.reports.performance, f) << "\n"
            << render(r.reports.within, f) << "\n"
            << render(r.reports.cross_scenario, f) << "\n"
            << render(r.reports.cross_task, f);
  std::cerr << fmt::format("bundle: {} ({} files, manifest.json)\n", r.bundle.string(), r.manifest.size());
  if (r.reports.has_undefined()) {
    std::cerr << "warning: some stability metrics are undefined (shown as n/a)\n";
    return kExitDegenerate;
  }
  return kExitOk;
}

struct CompareArgs {
  std::string bundle;
  std::string mode;
  std::vector<std::string> fi;
  std::vector<std::string> shap;
  std::string fi_diag, shap_diag, fi_prog, shap_prog;
  std::string domains;
};

int cmd_compare(const Globals& g, const CompareArgs& a) {
  if (!a.bundle.empty()) {
    const Reports r = reports_from_bundle(a.bundle);
    const ReportFormat f = parse_format(g.format);
    std::cout << render(r.within, f) << "\n" << render(r.cross_scenario, f) << "\n" << render(r.cross_task, f);
    if (!g.out.empty()) write_reports(r, g.out);
    if (r.has_undefined()) {
      std::cerr << "warning: some metrics are undefined for these inputs (shown as n/a)\n";
      return kExitDegenerate;
    }
    return kExitOk;
  }
  if (a.mode == "within") {
    if (a.fi.empty() || a.fi.size() != a.shap.size()) {
      throw ConfigError("within mode needs matching --fi/--shap pairs");
    }
    StabilityTable t{TableKind::Within, {}};
    for (std::size_t i = 0; i < a.fi.size(); ++i) {
      const ImportanceVector fi = load_importance(a.fi[i]);
      const ImportanceVector shap = load_importance(a.shap[i]);
      StabilityRecord rec = within_model_analysis(fi, shap);
      rec.left = label_of(shap, a.shap[i]);
      rec.task = task_of(shap);
      t.rows.push_back(std::move(rec));
    }
    return emit_table(t, g);
  }
  if (a.mode == "scenario") {
    if (a.shap.size() < 2) throw ConfigError("scenario mode needs at least two --shap files");
    std::vector<ImportanceVector> v;
    for (const auto& p : a.shap) v.push_back(load_importance(p));
    StabilityTable t{TableKind::CrossScenario, {}};
    for (std::size_t i = 0; i < v.size(); ++i) {
      for (std::size_t j = i + 1; j < v.size(); ++j) {
        StabilityRecord rec = cross_scenario_analysis(v[i], v[j]);
        rec.left = label_of(v[i], a.shap[i]);
        rec.right = label_of(v[j], a.shap[j]);
        rec.task = task_of(v[i]) == task_of(v[j]) ? task_of(v[i]) : "";
        t.rows.push_back(std::move(rec));
      }
    }
    return emit_table(t, g);
  }
  if (a.mode == "task") {
    for (const auto* p : {&a.fi_diag, &a.shap_diag, &a.fi_prog, &a.shap_prog}) {
      if (p->empty()) throw ConfigError("task mode needs --fi-diag, --shap-diag, --fi-prog and --shap-prog");
    }
    const ImportanceVector fd = load_importance(a.fi_diag), sd = load_importance(a.shap_diag);
    const ImportanceVector fp = load_importance(a.fi_prog), sp = load_importance(a.shap_prog);
    DomainMap domains;
    if (!a.domains.empty()) {
      std::vector<std::string> features = sd.feature_names;
      features.insert(features.end(), sp.feature_names.begin(), sp.feature_names.end());
      domains = load_domain_map(a.domains, features);
    }
    CrossTaskRecord rec = cross_task_analysis(fd, sd, fp, sp, domains);
    rec.fi.left = rec.shap.left = label_of(sd, a.shap_diag);
    return emit_table(StabilityTable{TableKind::CrossTask, {rec.fi, rec.shap}}, g);
  }
  throw ConfigError("compare needs --bundle or --mode within|scenario|task");
}

int cmd_plot(const Globals& g, const std::string& shap_path, const std::string& matrix_path,
             const std::string& fi_path, std::size_t top_n) {
  PlotSpec spec;
  spec.top_n = top_n;
  const fs::path out = g.out.empty() ? fs::path(".") : fs::path(g.out);
  if (shap_path.empty() && fi_path.empty()) throw ConfigError("plot needs --shap (with --matrix) or --fi");
  if (!fi_path.empty()) {
    write_file(out / "fi_bar.svg", emit_fi_bar(load_importance(fi_path), spec));
    std::cout << (out / "fi_bar.svg").string() << "\n";
  }
  if (!shap_path.empty()) {
    if (matrix_path.empty()) throw ConfigError("a beeswarm plot needs --matrix with the explained feature values");
    const AttributionFile f = attributions_from_json(read_file(shap_path));
    const FeatureMatrix m = feature_matrix_from_csv(read_file(matrix_path));
    for (const auto& a : f.explanations) {
      const std::string name =
          f.explanations.size() == 1 ? "shap_beeswarm.svg" : fmt::format("shap_beeswarm_{}.svg", to_string(a.target));
      write_file(out / name, emit_beeswarm(a, m, spec));
      std::cout << (out / name).string() << "\n";
    }
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"xstab: Shapley attributions, permutation importance and explanation-stability reports"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "Master seed (overrides the config)");
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--format", g.format, "Table format printed to stdout")->check(CLI::IsMember({"md", "csv", "json"}));
  app.add_option("--jobs", g.jobs, "Worker threads (0 = all cores)");

  std::string synth_config;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic longitudinal cohort (dataset.csv + schema.json)");
  synth->add_option("--config", synth_config, "Synthetic cohort config (JSON)")->check(CLI::ExistingFile);

  std::string run_config;
  auto* run = app.add_subcommand("run", "Run the full experiment and write a result bundle");
  run->add_option("--config", run_config, "Experiment config (JSON)")->check(CLI::ExistingFile);

  CompareArgs ca;
  auto* compare = app.add_subcommand("compare", "Stability tables from archived FI / attribution files");
  compare->add_option("--bundle", ca.bundle, "Result bundle written by 'run'")->check(CLI::ExistingDirectory);
  compare->add_option("--mode", ca.mode, "within | scenario | task")
      ->check(CLI::IsMember({"within", "scenario", "task"}));
  compare->add_option("--fi", ca.fi, "FI vector file (within mode; repeat per model)");
  compare->add_option("--shap", ca.shap, "Attribution or mean |SHAP| file (repeatable)");
  compare->add_option("--fi-diag", ca.fi_diag, "Diagnosis FI file (task mode)");
  compare->add_option("--shap-diag", ca.shap_diag, "Diagnosis attribution file (task mode)");
  compare->add_option("--fi-prog", ca.fi_prog, "Prognosis FI file (task mode)");
  compare->add_option("--shap-prog", ca.shap_prog, "Prognosis attribution file (task mode)");
  compare->add_option("--domains", ca.domains, "Feature -> domain map or dataset schema (task mode)");

  std::string plot_shap, plot_matrix, plot_fi;
  std::size_t top_n = 10;
  auto* plot = app.add_subcommand("plot", "Render SHAP beeswarm and FI bar plots as SVG");
  plot->add_option("--shap", plot_shap, "Attribution file");
  plot->add_option("--matrix", plot_matrix, "Feature matrix CSV the attributions explain");
  plot->add_option("--fi", plot_fi, "FI vector file");
  plot->add_option("--top-n", top_n, "Number of features to draw")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitError;
  }

  try {
    if (*synth) return cmd_synth(g, synth_config);
    if (*run) return cmd_run(g, run_config);
    if (*compare) return cmd_compare(g, ca);
    if (*plot) return cmd_plot(g, plot_shap, plot_matrix, plot_fi, top_n);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
