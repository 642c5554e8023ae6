#include <algorithm>
#include <numeric>

#include <fmt/format.h>

#include "json.hpp"
#include "xstab/error.hpp"
#include "xstab/models.hpp"

namespace xstab {

using nlohmann::json;

std::optional<double> rank_auc(std::span<const double> scores, const std::vector<bool>& positive) {
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Average ranks over tie groups; the rank-sum form counts tied pairs as 1/2.
  double pos_rank_sum = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) {
      if (positive[order[t]]) {
        pos_rank_sum += avg;
        ++n_pos;
      }
    }
    i = j + 1;
  }
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) return std::nullopt;
  const double np = static_cast<double>(n_pos);
  return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * static_cast<double>(n_neg));
}

EvalMetrics evaluate(const Predictor& p, const FeatureMatrix& test) {
  if (test.n_rows() == 0) throw EvalError("cannot evaluate on an empty matrix");
  const auto& classes = p.classes();
  const std::size_t k = classes.size();
  std::vector<std::size_t> truth(test.n_rows());
  for (std::size_t i = 0; i < test.n_rows(); ++i) {
    auto it = std::find(classes.begin(), classes.end(), test.labels[i]);
    if (it == classes.end()) {
      throw EvalError(fmt::format("test label {} was not seen during training", to_string(test.labels[i])));
    }
    truth[i] = static_cast<std::size_t>(it - classes.begin());
  }

  EvalMetrics m;
  m.n = test.n_rows();
  m.confusion.assign(k, std::vector<std::size_t>(k, 0));
  std::vector<std::vector<double>> probs(k, std::vector<double>(test.n_rows()));
  std::vector<double> buf(k);
  for (std::size_t i = 0; i < test.n_rows(); ++i) {
    p.predict_proba(test.row(i), buf);
    std::size_t pred = 0;
    for (std::size_t c = 1; c < k; ++c) {
      if (buf[c] > buf[pred]) pred = c;
    }
    ++m.confusion[truth[i]][pred];
    for (std::size_t c = 0; c < k; ++c) probs[c][i] = buf[c];
  }

  const double n = static_cast<double>(m.n);
  std::size_t diag = 0;
  for (std::size_t c = 0; c < k; ++c) diag += m.confusion[c][c];
  m.accuracy = static_cast<double>(diag) / n;

  double pe = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    double row = 0.0, col = 0.0;
    for (std::size_t o = 0; o < k; ++o) {
      row += static_cast<double>(m.confusion[c][o]);
      col += static_cast<double>(m.confusion[o][c]);
    }
    pe += (row / n) * (col / n);
  }
  m.kappa = pe < 1.0 ? (m.accuracy - pe) / (1.0 - pe) : 0.0;

  for (std::size_t c = 0; c < k; ++c) {
    PerLabelMetrics pl{classes[c]};
    const double tp = static_cast<double>(m.confusion[c][c]);
    double predicted = 0.0, actual = 0.0;
    for (std::size_t o = 0; o < k; ++o) {
      predicted += static_cast<double>(m.confusion[o][c]);
      actual += static_cast<double>(m.confusion[c][o]);
    }
    pl.support = static_cast<std::size_t>(actual);
    pl.precision = predicted > 0 ? tp / predicted : 0.0;
    pl.recall = actual > 0 ? tp / actual : 0.0;
    pl.f1 = pl.precision + pl.recall > 0 ? 2.0 * pl.precision * pl.recall / (pl.precision + pl.recall) : 0.0;
    m.macro_precision += pl.precision;
    m.macro_recall += pl.recall;
    m.macro_f1 += pl.f1;
    m.per_label.push_back(pl);
  }
  m.macro_precision /= static_cast<double>(k);
  m.macro_recall /= static_cast<double>(k);
  m.macro_f1 /= static_cast<double>(k);

  if (k == 2) {
    std::vector<bool> pos(test.n_rows());
    for (std::size_t i = 0; i < test.n_rows(); ++i) pos[i] = truth[i] == 1;
    m.auc = rank_auc(probs[1], pos);
  } else {
    double total = 0.0;
    std::size_t defined = 0;
    for (std::size_t c = 0; c < k; ++c) {
      std::vector<bool> pos(test.n_rows());
      for (std::size_t i = 0; i < test.n_rows(); ++i) pos[i] = truth[i] == c;
      if (auto a = rank_auc(probs[c], pos)) {
        total += *a;
        ++defined;
      }
    }
    if (defined) m.auc = total / static_cast<double>(defined);
  }
  return m;
}

std::string eval_metrics_to_json(const EvalMetrics& m) {
  json j;
  j["accuracy"] = m.accuracy;
  j["auc"] = m.auc ? json(*m.auc) : json(nullptr);
  j["kappa"] = m.kappa;
  j["n"] = m.n;
  json per = json::array();
  for (const auto& pl : m.per_label) {
    per.push_back({{"label", std::string(to_string(pl.label))},
                   {"precision", pl.precision},
                   {"recall", pl.recall},
                   {"f1", pl.f1},
                   {"support", pl.support}});
  }
  j["per_label"] = per;
  j["macro"] = {{"precision", m.macro_precision}, {"recall", m.macro_recall}, {"f1", m.macro_f1}};
  j["confusion"] = m.confusion;
  return j.dump(2) + "\n";
}

EvalMetrics eval_metrics_from_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    EvalMetrics m;
    m.accuracy = j.at("accuracy").get<double>();
    if (!j.at("auc").is_null()) m.auc = j.at("auc").get<double>();
    m.kappa = j.at("kappa").get<double>();
    m.n = j.value("n", std::size_t{0});
    for (const auto& pl : j.at("per_label")) {
      m.per_label.push_back(PerLabelMetrics{parse_label(pl.at("label").get<std::string>()),
                                            pl.at("precision").get<double>(), pl.at("recall").get<double>(),
                                            pl.at("f1").get<double>(), pl.value("support", std::size_t{0})});
    }
    m.macro_precision = j.at("macro").at("precision").get<double>();
    m.macro_recall = j.at("macro").at("recall").get<double>();
    m.macro_f1 = j.at("macro").at("f1").get<double>();
    if (j.contains("confusion")) m.confusion = j.at("confusion").get<std::vector<std::vector<std::size_t>>>();
    return m;
  } catch (const json::exception& e) {
    throw ParseError(std::string("eval metrics: ") + e.what());
  }
}

}  // namespace xstab
