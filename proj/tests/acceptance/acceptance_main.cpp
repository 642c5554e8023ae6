// Acceptance suite: one PASS/FAIL line per criterion. Exit status is non-zero
// when any criterion fails. argv[1] is a scratch directory for experiment runs.
#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "fixtures.hpp"
#include "support.hpp"
#include "xstab/common.hpp"
#include "xstab/error.hpp"
#include "xstab/experiment.hpp"
#include "xstab/report.hpp"
#include "xstab/shap.hpp"
#include "xstab/stability.hpp"

namespace fs = std::filesystem;
using namespace xstab;
using namespace xstab::testing;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Collects failures inside one criterion; the first few are reported.
struct Check {
  std::vector<std::string> failures;
  std::vector<std::string> notes;

  void expect(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
  void note(const std::string& s) { notes.push_back(s); }
};

// ---- Shared fixtures ---------------------------------------------------------

FeatureMatrix random_matrix(std::size_t rows, std::size_t features, std::uint64_t seed,
                            const std::function<ClassLabel(const std::vector<double>&)>& label) {
  Rng r(seed);
  std::vector<std::vector<double>> values;
  std::vector<ClassLabel> labels;
  for (std::size_t i = 0; i < rows; ++i) {
    std::vector<double> row(features);
    for (auto& v : row) v = r.normal();
    labels.push_back(label(row));
    values.push_back(std::move(row));
  }
  return make_matrix(names(features), values, labels, {ClassLabel::NC, ClassLabel::AD});
}

ClassLabel noisy_linear(const std::vector<double>& x) {
  double s = 0;
  for (std::size_t j = 0; j < x.size(); ++j) s += (j % 2 ? -1.0 : 1.0) * x[j] / static_cast<double>(j + 1);
  return s + 0.3 * std::sin(7 * x[0]) > 0 ? ClassLabel::AD : ClassLabel::NC;
}

// ---- Criteria -------------------------------------------------------------------

void exact_additivity(Check& c) {
  const auto train = random_matrix(400, 10, 1, noisy_linear);
  const auto test = random_matrix(100, 10, 2, noisy_linear);
  const ForestModel forest = train_forest(train, ForestParams{25, {6, 2}, 0.7, true}, 3);
  const BackgroundSet bg = make_background(train, 100, 4);
  c.expect(bg.size() == 100, "background has 100 rows");

  const auto t0 = Clock::now();
  const AttributionMatrix a = explain_dataset(forest, test, bg, ShapMethod::exact(), 1, 1);
  const double elapsed = seconds_since(t0);

  double worst = 0;
  for (std::size_t i = 0; i < test.n_rows(); ++i) {
    double s = a.base_value;
    for (double v : a.row(i)) s += v;
    worst = std::max(worst, std::abs(s - forest.predict_proba(test.row(i))[1]));
  }
  c.expect(worst <= 1e-9, fmt::format("max additivity gap {:.3g} > 1e-9", worst));
  c.expect(elapsed < 10.0, fmt::format("exact run took {:.2f} s", elapsed));
  c.note(fmt::format("max |base + sum(phi) - f(x)| = {:.2g}, {:.2f} s for 100 x 10 x 100 on one thread", worst,
                     elapsed));
}

void sampled_agreement(Check& c) {
  const auto train = random_matrix(600, 6, 11, [](const std::vector<double>& x) {
    return (x[0] > 0) != (x[1] > 0.3) || x[2] + x[3] > 1.2 ? ClassLabel::AD : ClassLabel::NC;
  });
  const TreeModel tree = train_tree(train, {3, 5});
  c.expect(tree.depth() == 3, fmt::format("tree depth {} (expected 3)", tree.depth()));
  const BackgroundSet bg = make_background(train, 64, 12);
  c.expect(bg.size() == 64, "background has 64 rows");
  const auto probe = random_matrix(10, 6, 13, noisy_linear);

  // 2048 permutations: at least 2000 and a multiple of the background size,
  // so every background row anchors the same number of permutation pairs.
  const std::size_t perms = 2048;
  double worst = 0;
  for (std::size_t i = 0; i < probe.n_rows(); ++i) {
    const auto exact = exact_shapley(tree, probe.row(i), bg, 1);
    const auto s = sampled_shapley(tree, probe.row(i), bg, 1, {perms, derive_seed(99, {i}), false});
    for (std::size_t j = 0; j < 6; ++j) worst = std::max(worst, std::abs(s.phi[j] - exact.phi[j]));
  }
  c.expect(worst <= 0.01, fmt::format("max |phi_sampled - phi_exact| = {:.4f}", worst));

  const int seeds = 50;
  double worst_z = 0;
  for (std::size_t i = 0; i < 2; ++i) {
    const auto exact = exact_shapley(tree, probe.row(i), bg, 1);
    std::vector<double> sum(6, 0), sq(6, 0);
    for (int s = 0; s < seeds; ++s) {
      const auto r = sampled_shapley(tree, probe.row(i), bg, 1, {perms, derive_seed(500 + i, {std::size_t(s)}), false});
      for (std::size_t j = 0; j < 6; ++j) {
        sum[j] += r.phi[j];
        sq[j] += r.phi[j] * r.phi[j];
      }
    }
    for (std::size_t j = 0; j < 6; ++j) {
      const double mean = sum[j] / seeds;
      const double var = std::max(0.0, (sq[j] - seeds * mean * mean) / (seeds - 1));
      const double se = std::sqrt(var / seeds);
      const double gap = std::abs(mean - exact.phi[j]);
      if (se > 0) worst_z = std::max(worst_z, gap / se);
      c.expect(gap <= 3 * se + 1e-12,
               fmt::format("row {} feature {}: |mean - exact| = {:.3g} > 3 SE = {:.3g}", i, j, gap, 3 * se));
    }
  }
  c.note(fmt::format("max error {:.4f} at {} permutations, worst seed-mean deviation {:.2f} SE", worst, perms,
                     worst_z));
}

void shapley_axioms(Check& c) {
  // Dummy: a tree that never splits on f3.
  const auto train = random_matrix(300, 4, 21, [](const std::vector<double>& x) {
    return x[0] + x[1] > 0 ? ClassLabel::AD : ClassLabel::NC;
  });
  const std::vector<std::size_t> allowed{0, 1, 3};
  std::vector<std::size_t> rows(train.n_rows());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  const TreeModel tree = train_tree(train, {4, 1}, rows, allowed);
  const BackgroundSet bg = make_background(train, 30, 22);
  const auto probe = random_matrix(20, 4, 23, noisy_linear);
  for (std::size_t i = 0; i < probe.n_rows(); ++i) {
    const auto r = exact_shapley(tree, probe.row(i), bg, 1);
    c.expect(r.phi[2] == 0.0, fmt::format("dummy feature phi = {} on row {}", r.phi[2], i));
  }

  // Symmetry: f depends on x1 + x2 only; background marginals are mirrored.
  const auto sym = FunctionPredictor::binary(names(3), [](std::span<const double> x) {
    return 1.0 / (1.0 + std::exp(-(x[0] + x[1]) * (1.0 + 0.5 * x[2])));
  });
  std::vector<std::vector<double>> bg_rows;
  Rng r(24);
  for (int i = 0; i < 10; ++i) {
    const double a = r.normal(), b = r.normal(), z = r.normal();
    bg_rows.push_back({a, b, z});
    bg_rows.push_back({b, a, z});
  }
  const BackgroundSet sym_bg = background(names(3), bg_rows);
  double worst_sym = 0;
  for (int i = 0; i < 20; ++i) {
    const double v = r.normal();
    const auto res = exact_shapley(*sym, std::vector<double>{v, v, r.normal()}, sym_bg, 1);
    worst_sym = std::max(worst_sym, std::abs(res.phi[0] - res.phi[1]));
  }
  c.expect(worst_sym <= 1e-9, fmt::format("symmetric features differ by {:.3g}", worst_sym));

  // Linearity: forest attributions equal the mean of member-tree attributions.
  const ForestModel forest = train_forest(train, ForestParams{7, {4, 2}, 0.75, true}, 25);
  double worst_lin = 0;
  for (std::size_t i = 0; i < probe.n_rows(); ++i) {
    const auto whole = exact_shapley(forest, probe.row(i), bg, 1);
    std::vector<double> mean(4, 0.0);
    for (const auto& t : forest.trees()) {
      const auto part = exact_shapley(t, probe.row(i), bg, 1);
      for (std::size_t j = 0; j < 4; ++j) mean[j] += part.phi[j] / static_cast<double>(forest.trees().size());
    }
    for (std::size_t j = 0; j < 4; ++j) worst_lin = std::max(worst_lin, std::abs(whole.phi[j] - mean[j]));
  }
  c.expect(worst_lin <= 1e-9, fmt::format("ensemble linearity gap {:.3g}", worst_lin));
  c.note(fmt::format("dummy phi exactly 0; symmetry gap {:.1g}; linearity gap {:.1g}", worst_sym, worst_lin));
}

ImportanceVector random_importance(Rng& r, std::size_t n, bool ties) {
  // Random names so the name-keyed join is exercised.
  std::vector<std::string> pool{"a", "b", "c", "d", "e", "f", "g", "h", "i", "j", "k", "l"};
  r.shuffle(pool);
  pool.resize(n);
  std::vector<double> scores(n), signs(n);
  for (std::size_t i = 0; i < n; ++i) {
    scores[i] = ties ? 0.1 * static_cast<double>(r.index(3)) : r.uniform();
    signs[i] = ties ? static_cast<double>(r.index(3)) - 1.0 : r.uniform(-1, 1);
  }
  auto v = vec(scores, ImportanceSource::MeanAbsShap, pool);
  v.signed_means = signs;
  return v;
}

// Shared features in name order, and aligned score / sign columns.
struct Joined {
  std::vector<std::string> names;
  std::vector<double> a, b, sa, sb;
};

Joined join(const ImportanceVector& x, const ImportanceVector& y) {
  std::map<std::string, std::size_t> iy;
  for (std::size_t j = 0; j < y.size(); ++j) iy[y.feature_names[j]] = j;
  std::map<std::string, std::size_t> ix;
  for (std::size_t i = 0; i < x.size(); ++i) ix[x.feature_names[i]] = i;
  Joined out;
  for (const auto& [name, i] : ix) {
    auto it = iy.find(name);
    if (it == iy.end()) continue;
    out.names.push_back(name);
    out.a.push_back(x.scores[i]);
    out.b.push_back(y.scores[it->second]);
    out.sa.push_back((*x.signed_means)[i]);
    out.sb.push_back((*y.signed_means)[it->second]);
  }
  return out;
}

template <typename F>
std::optional<double> defined(F&& f) {
  try {
    return f();
  } catch (const UndefinedMetricError&) {
    return std::nullopt;
  }
}

void rank_metric_oracle(Check& c) {
  Rng r(31);
  int compared = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const bool ties = trial % 2 == 1;
    const auto x = random_importance(r, 2 + r.index(7), ties);
    const auto y = random_importance(r, 2 + r.index(7), ties);
    const Joined j = join(x, y);
    const std::string tag = fmt::format("pair {}", trial);

    const auto rho = defined([&] { return spearman(x, y); });
    const auto rho_o = j.names.size() >= 2 ? oracle_spearman(j.a, j.b) : std::nullopt;
    c.expect(rho.has_value() == rho_o.has_value(), tag + ": rho definedness");
    if (rho && rho_o) c.expect(std::abs(*rho - *rho_o) <= 1e-12, tag + ": rho");

    const auto tau = defined([&] { return kendall_tau(x, y); });
    const auto tau_o = j.names.size() >= 2 ? oracle_kendall(j.a, j.b) : std::nullopt;
    c.expect(tau.has_value() == tau_o.has_value(), tag + ": tau definedness");
    if (tau && tau_o) c.expect(std::abs(*tau - *tau_o) <= 1e-12, tag + ": tau");

    for (std::size_t k : {1u, 2u, 5u, 10u, 20u}) {
      const std::size_t used = std::min({k, x.size(), y.size()});
      const auto tx = oracle_topk(x, used), ty = oracle_topk(y, used);
      std::size_t inter = 0;
      for (const auto& n : tx) inter += ty.count(n);
      const double expected = static_cast<double>(inter) / static_cast<double>(tx.size() + ty.size() - inter);
      const auto got = jaccard_topk(x, y, k);
      c.expect(got.value == expected && got.k == used, fmt::format("{}: J@{}", tag, k));
      if (k == 10) {
        auto fi = x;
        fi.source = ImportanceSource::FI;
        const auto pr = precision_recall_top10(fi, y);
        c.expect(pr.precision == static_cast<double>(inter) / static_cast<double>(tx.size()), tag + ": precision");
        c.expect(pr.recall == static_cast<double>(inter) / static_cast<double>(ty.size()), tag + ": recall");
      }
    }

    if (!j.names.empty()) {
      std::size_t same = 0;
      double delta = 0;
      auto sign = [](double v) { return std::abs(v) < 1e-12 ? 0 : (v > 0 ? 1 : -1); };
      for (std::size_t i = 0; i < j.names.size(); ++i) {
        same += sign(j.sa[i]) == sign(j.sb[i]);
        delta += std::abs(j.a[i] - j.b[i]);
      }
      const double n = static_cast<double>(j.names.size());
      c.expect(sign_consistency(x, y) == static_cast<double>(same) / n, tag + ": sign consistency");
      c.expect(mean_delta_abs_shap(x, y) == delta / n, tag + ": mean delta |SHAP|");
    } else {
      c.expect(!defined([&] { return sign_consistency(x, y); }), tag + ": sign on empty intersection");
    }
    ++compared;
  }
  c.note(fmt::format("{} random pairs (half with ties) agree with brute-force oracles", compared));
}

void identity_suite(Check& c) {
  Rng r(41);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 10 + r.index(15);
    std::vector<double> s(n), signs(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = trial % 2 ? 0.05 * static_cast<double>(r.index(6)) + 0.01 : r.uniform();
      signs[i] = r.uniform(-1, 1);
    }
    auto a = vec(s);
    a.signed_means = signs;
    const std::string tag = fmt::format("vector {}", trial);

    const auto self = cross_scenario_analysis(a, a);
    const bool all_tied = std::all_of(s.begin(), s.end(), [&](double v) { return v == s[0]; });
    if (!all_tied) {
      c.expect(self.rho && *self.rho == 1.0, tag + ": self rho");
      c.expect(self.tau && *self.tau == 1.0, tag + ": self tau");
    }
    c.expect(self.j10 == 1.0 && self.j20 == 1.0, tag + ": self Jaccard");
    c.expect(self.sign_consistency == 1.0, tag + ": self sign");
    c.expect(mean_delta_abs_shap(a, a) == 0.0, tag + ": self delta");

    // Tie-free reversal.
    std::vector<double> distinct(n);
    for (std::size_t i = 0; i < n; ++i) distinct[i] = static_cast<double>(i) + r.uniform() * 0.5;
    auto fwd = vec(distinct), rev = vec(distinct);
    std::reverse(rev.scores.begin(), rev.scores.end());
    c.expect(std::abs(spearman(fwd, rev) + 1.0) <= 1e-12, tag + ": reversed rho");
    c.expect(std::abs(kendall_tau(fwd, rev) + 1.0) <= 1e-12, tag + ": reversed tau");

    // Precision equals recall whenever both sides contribute ten features.
    auto fi = vec(distinct, ImportanceSource::FI);
    const auto other = random_importance(r, 10 + r.index(3), trial % 2);
    auto fi10 = fi;
    const auto pr = precision_recall_top10(fi10, other);
    c.expect(pr.k == 10 && pr.precision == pr.recall, tag + ": precision10 = recall10");
  }
  c.note("100 vectors: self-comparison identities, reversal = -1, precision@10 = recall@10");
}

struct RunResult {
  fs::path dir;
  ExperimentResult result;
  double seconds = 0;
};

void contributions(Check& c, const RunResult& run) {
  const auto v = vec({0.8, 0.2}, ImportanceSource::MeanAbsShap, {"CDR_MEMORY", "APOE"});
  const auto cv = domain_contributions(v, {{"CDR_MEMORY", DomainTag::Cognitive}, {"APOE", DomainTag::Genetic}});
  const std::array<double, 5> want{0.8, 0, 0, 0.2, 0};
  for (int i = 0; i < 5; ++i) c.expect(std::abs(cv.shares[i] - want[i]) <= 1e-12, "hand fixture slot mismatch");

  // Every emitted cross-task report (all three formats) holds vectors summing to 1.
  std::size_t vectors = 0;
  for (ReportFormat f : {ReportFormat::Markdown, ReportFormat::Csv, ReportFormat::Json}) {
    const auto path = run.dir / "reports" / fmt::format("cross_task.{}", extension(f));
    const StabilityTable t = parse_table(read_file(path), f);
    const double tol = f == ReportFormat::Markdown ? 5 * 0.0005 : 1e-9;  // markdown prints three decimals
    for (const auto& row : t.rows) {
      for (const auto& side : {row.contrib_diag, row.contrib_prog}) {
        if (!side) continue;
        ++vectors;
        c.expect(std::abs(side->sum() - 1.0) <= tol,
                 fmt::format("{} {}: contribution sum {}", path.filename().string(), row.left, side->sum()));
      }
    }
  }
  for (const auto& row : run.result.reports.cross_task.rows) {
    for (const auto& side : {row.contrib_diag, row.contrib_prog}) {
      if (side) c.expect(std::abs(side->sum() - 1.0) <= 1e-9, "in-memory contribution sum");
    }
  }
  c.expect(vectors >= 8, fmt::format("only {} contribution vectors found in reports", vectors));
  c.note(fmt::format("hand fixture (0.8, 0, 0, 0.2, 0); {} report vectors sum to 1", vectors));
}

void leakage(Check& c, const RunResult& run) {
  for (const auto& s : run.result.scenarios) {
    const std::string tag = s.spec.key();
    c.expect(s.audit.train_test_disjoint, tag + ": train/test subjects overlap");
    c.expect(s.audit.folds_disjoint, tag + ": validation folds overlap");
    c.expect(s.audit.folds_cover_train, tag + ": folds do not cover the training subjects");
    c.expect(s.audit.synthetic_in_validation == 0, tag + ": synthetic rows in validation");
    c.expect(s.audit.synthetic_in_test == 0, tag + ": synthetic rows in test");
    // Independent check on the archived test matrix.
    const FeatureMatrix test = feature_matrix_from_csv(read_file(run.dir / "scenarios" / tag / "test_matrix.csv"));
    c.expect(test.synthetic_count() == 0, tag + ": archived test matrix holds synthetic rows");
    c.expect(test.n_rows() == s.n_test_rows, tag + ": archived test matrix row count");
  }
  c.expect(run.result.scenarios.size() == 8, "expected 8 scenarios");
  c.note(fmt::format("{} scenarios: disjoint splits and folds, 0 synthetic rows in validation/test",
                     run.result.scenarios.size()));
}

EvalMetrics oracle_metrics(const std::vector<std::size_t>& truth, const std::vector<std::size_t>& pred,
                           std::size_t k) {
  // Straight from the row lists, no confusion matrix.
  EvalMetrics m;
  const double n = static_cast<double>(truth.size());
  double agree = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) agree += truth[i] == pred[i];
  m.accuracy = agree / n;
  double pe = 0;
  for (std::size_t c = 0; c < k; ++c) {
    double t = 0, p = 0, tp = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      t += truth[i] == c;
      p += pred[i] == c;
      tp += truth[i] == c && pred[i] == c;
    }
    pe += (t / n) * (p / n);
    PerLabelMetrics pl{kAllLabels[c]};
    pl.precision = p ? tp / p : 0.0;
    pl.recall = t ? tp / t : 0.0;
    pl.f1 = pl.precision + pl.recall ? 2 * pl.precision * pl.recall / (pl.precision + pl.recall) : 0.0;
    m.per_label.push_back(pl);
  }
  m.kappa = pe < 1 ? (m.accuracy - pe) / (1 - pe) : 0.0;
  for (const auto& pl : m.per_label) {
    m.macro_precision += pl.precision / static_cast<double>(k);
    m.macro_recall += pl.recall / static_cast<double>(k);
    m.macro_f1 += pl.f1 / static_cast<double>(k);
  }
  return m;
}

void evaluation_oracle(Check& c) {
  Rng r(51);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t k = trial % 3 == 0 ? 3 : 2;
    const std::size_t n = 4 + r.index(17);
    std::vector<ClassLabel> classes(kAllLabels, kAllLabels + k);
    std::vector<std::size_t> truth(n), pred(n);
    std::vector<std::vector<double>> probs(n), rows(n);
    std::vector<ClassLabel> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
      truth[i] = r.index(k);
      labels[i] = classes[truth[i]];
      std::vector<double> p(k);
      double total = 0;
      for (auto& v : p) total += (v = 0.05 + static_cast<double>(r.index(10)));
      for (auto& v : p) v /= total;
      probs[i] = p;
      pred[i] = static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());  // first max wins
      rows[i] = {static_cast<double>(i)};
    }
    const auto model = table_predictor(probs, classes);
    const EvalMetrics got = evaluate(*model, make_matrix({"id"}, rows, labels, classes));
    const EvalMetrics want = oracle_metrics(truth, pred, k);
    const std::string tag = fmt::format("fixture {}", trial);
    auto near = [&](double a, double b, const char* what) { c.expect(std::abs(a - b) <= 1e-12, tag + ": " + what); };
    near(got.accuracy, want.accuracy, "accuracy");
    near(got.kappa, want.kappa, "kappa");
    near(got.macro_precision, want.macro_precision, "macro precision");
    near(got.macro_recall, want.macro_recall, "macro recall");
    near(got.macro_f1, want.macro_f1, "macro F1");
    for (std::size_t cl = 0; cl < k; ++cl) {
      near(got.per_label[cl].precision, want.per_label[cl].precision, "precision");
      near(got.per_label[cl].recall, want.per_label[cl].recall, "recall");
      near(got.per_label[cl].f1, want.per_label[cl].f1, "F1");
    }
    // AUC: binary = positive class; multiclass = mean one-vs-rest over defined labels.
    double auc_sum = 0;
    std::size_t auc_n = 0;
    for (std::size_t cl = (k == 2 ? 1 : 0); cl < k; ++cl) {
      std::vector<double> s(n), cubed(n);
      std::vector<bool> pos(n);
      for (std::size_t i = 0; i < n; ++i) {
        s[i] = probs[i][cl];
        cubed[i] = s[i] * s[i] * s[i];
        pos[i] = truth[i] == cl;
      }
      const auto o = oracle_auc(s, pos);
      const auto direct = rank_auc(s, pos), cube = rank_auc(cubed, pos);
      c.expect(direct.has_value() == o.has_value(), tag + ": AUC definedness");
      if (o && direct && cube) {
        near(*direct, *o, "rank AUC");
        near(*cube, *direct, "AUC under cubing");
        auc_sum += *o;
        ++auc_n;
      }
    }
    c.expect(got.auc.has_value() == (auc_n > 0), tag + ": evaluate AUC definedness");
    if (got.auc && auc_n) near(*got.auc, auc_sum / static_cast<double>(auc_n), "evaluate AUC");
  }
  // Hand-computed balanced constant predictor.
  const auto constant = FunctionPredictor::binary({"id"}, [](std::span<const double>) { return 0.8; });
  const auto e = evaluate(*constant, make_matrix({"id"}, {{0}, {1}, {2}, {3}},
                                                 {ClassLabel::NC, ClassLabel::AD, ClassLabel::NC, ClassLabel::AD},
                                                 {ClassLabel::NC, ClassLabel::AD}));
  c.expect(e.accuracy == 0.5 && e.kappa == 0.0 && e.auc == 0.5, "constant predictor: accuracy 0.5, kappa 0");
  c.note("300 fixtures (<= 20 rows) match the row-level oracle to 1e-12; AUC unchanged by cubing");
}

std::size_t count_manifest(const std::vector<ManifestEntry>& m, const std::function<bool(const std::string&)>& pred) {
  return static_cast<std::size_t>(std::count_if(m.begin(), m.end(), [&](const ManifestEntry& e) { return pred(e.path); }));
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

void end_to_end(Check& c, const RunResult& run) {
  const auto& m = run.result.manifest;
  c.expect(run.seconds < 300, fmt::format("default run took {:.1f} s", run.seconds));
  const auto models = count_manifest(m, [](const std::string& p) { return ends_with(p, "/model.json"); });
  const auto attributions = count_manifest(m, [](const std::string& p) { return ends_with(p, "/shap.json"); });
  std::size_t tables = 0;
  for (const char* t : {"within_model", "cross_scenario", "cross_task"}) {
    tables += count_manifest(m, [&](const std::string& p) { return p == fmt::format("reports/{}.md", t); });
  }
  c.expect(models == 8, fmt::format("{} model files", models));
  c.expect(attributions == 8, fmt::format("{} attribution files", attributions));
  c.expect(tables == 3, fmt::format("{} stability tables", tables));

  std::optional<double> accuracy;
  for (const auto& s : run.result.scenarios) {
    if (s.spec.task == Task::Diagnosis && s.spec.labels == std::vector<ClassLabel>{ClassLabel::NC, ClassLabel::AD}) {
      accuracy = s.test_metrics.accuracy;
    }
  }
  c.expect(accuracy && *accuracy >= 0.95, fmt::format("NC vs AD diagnosis accuracy {}", accuracy.value_or(-1)));

  // Domain contribution recomputed from the archived attribution and domain files.
  const fs::path dir = run.dir / "scenarios" / "diagnosis_NC_vs_AD";
  const ImportanceVector shap = load_importance(dir / "shap.json");
  const ContributionVector cv = domain_contributions(shap, load_domain_map(dir / "domains.json", shap.feature_names));
  const double cog_func = cv.shares[0] + cv.shares[1];
  c.expect(cog_func >= 0.5, fmt::format("cognitive + functional contribution {:.3f}", cog_func));
  c.note(fmt::format("{:.1f} s; {} models, {} attribution files, {} tables; NC vs AD accuracy {:.3f}; "
                     "cognitive + functional share {:.3f}",
                     run.seconds, models, attributions, tables, accuracy.value_or(-1), cog_func));
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(XSTAB_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void reproducibility(Check& c, const RunResult& first, const fs::path& work) {
  ExperimentConfig cfg;
  cfg.output_dir = (work / "run_b").string();
  cfg.jobs = 0;  // a different thread count must not change any byte
  fs::remove_all(cfg.output_dir);
  run_experiment(cfg);
  const std::string a = read_file(first.dir / "manifest.json");
  const std::string b = read_file(fs::path(cfg.output_dir) / "manifest.json");
  c.expect(a == b, "manifests differ between runs with the same seed");

  const fs::path out = work / "compare_out";
  fs::remove_all(out);
  const int code = run_cli(fmt::format("--out {} compare --bundle {}", out.string(), first.dir.string()));
  c.expect(code == 0, fmt::format("compare exited with {}", code));
  std::size_t matched = 0;
  for (const auto& e : first.result.manifest) {
    if (e.path.rfind("reports/", 0) != 0) continue;
    const fs::path p = out / e.path;
    if (!fs::exists(p)) {
      c.expect(false, "compare did not write " + e.path);
      continue;
    }
    const bool same = sha256_hex(read_file(p)) == e.sha256;
    c.expect(same, "hash differs for " + e.path);
    matched += same;
  }
  c.expect(matched >= 9, fmt::format("only {} report files compared", matched));
  c.note(fmt::format("manifest sha256 {}...; {} report files reproduced hash-for-hash by compare",
                     sha256_hex(a).substr(0, 12), matched));
}

void format_fixtures(Check& c) {
  std::size_t trips = 0;
  for (const auto& t : {published_within_table(), published_cross_scenario_table(), published_cross_task_table()}) {
    for (ReportFormat f : {ReportFormat::Markdown, ReportFormat::Csv, ReportFormat::Json}) {
      const std::string text = render(t, f);
      const StabilityTable back = parse_table(text, f);
      c.expect(back == t, fmt::format("{} did not survive {}", to_string(t.kind), extension(f)));
      c.expect(render(back, f) == text, fmt::format("{} re-render differs in {}", to_string(t.kind), extension(f)));
      ++trips;
    }
  }
  const auto ct = published_cross_task_table();
  const auto& shap = ct.rows[1];
  c.expect(shap.left == "NC vs AD" && shap.rho == 0.91 && shap.sign_consistency == 1.0 &&
               shap.mean_delta_abs_shap == 0.022,
           "cross-task fixture row");
  c.note(fmt::format("{} emit -> parse round trips without loss", trips));
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path work = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "xstab_acceptance";
  fs::create_directories(work);

  // The default experiment backs criteria 6, 7, 9 and 10; run it once up front.
  std::optional<RunResult> run;
  std::string run_error;
  try {
    ExperimentConfig cfg;
    cfg.output_dir = (work / "run_a").string();
    cfg.jobs = 1;
    fs::remove_all(cfg.output_dir);
    const auto t0 = Clock::now();
    ExperimentResult r = run_experiment(cfg);
    run = RunResult{cfg.output_dir, std::move(r), seconds_since(t0)};
  } catch (const std::exception& e) {
    run_error = e.what();
  }

  auto needs_run = [&](auto f) {
    return [&, f](Check& c) {
      if (!run) throw Error("default experiment failed: " + run_error);
      f(c, *run);
    };
  };

  struct Criterion {
    int id;
    std::string title;
    std::function<void(Check&)> body;
  };
  const std::vector<Criterion> criteria{
      {1, "exact Shapley additivity and runtime", exact_additivity},
      {2, "sampled vs exact Shapley agreement", sampled_agreement},
      {3, "Shapley axioms (dummy, symmetry, linearity)", shapley_axioms},
      {4, "rank metrics match brute-force oracles", rank_metric_oracle},
      {5, "identity and antisymmetry of stability metrics", identity_suite},
      {6, "domain contribution vectors", needs_run(contributions)},
      {7, "leakage freedom of the default experiment", needs_run(leakage)},
      {8, "evaluation metrics match hand-computed oracles", evaluation_oracle},
      {9, "end-to-end default experiment", needs_run(end_to_end)},
      {10, "reproducibility of runs and archived comparisons",
       needs_run([&](Check& c, const RunResult& r) { reproducibility(c, r, work); })},
      {11, "report format fixtures round-trip", format_fixtures},
  };

  int failed = 0;
  for (const auto& cr : criteria) {
    Check c;
    const auto t0 = Clock::now();
    try {
      cr.body(c);
    } catch (const std::exception& e) {
      c.failures.push_back(std::string("exception: ") + e.what());
    }
    const bool pass = c.failures.empty();
    failed += !pass;
    std::cout << fmt::format("{} [{:>2}] {} ({:.1f} s)\n", pass ? "PASS" : "FAIL", cr.id, cr.title,
                             seconds_since(t0));
    for (const auto& n : c.notes) std::cout << "         " << n << "\n";
    for (std::size_t i = 0; i < std::min<std::size_t>(c.failures.size(), 5); ++i) {
      std::cout << "         - " << c.failures[i] << "\n";
    }
    if (c.failures.size() > 5) std::cout << fmt::format("         ... {} more\n", c.failures.size() - 5);
  }
  std::cout << fmt::format("{} of {} criteria passed\n", criteria.size() - failed, criteria.size());
  return failed ? 1 : 0;
}
