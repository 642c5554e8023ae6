#include "xstab/stability.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <unordered_map>

#include <fmt/format.h>

#include "xstab/error.hpp"

namespace xstab {

std::vector<double> average_ranks(const std::vector<double>& scores) {
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = avg;
    i = j + 1;
  }
  return ranks;
}

RankedList::RankedList(const ImportanceVector& v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (v.scores[a] != v.scores[b]) return v.scores[a] > v.scores[b];
    return v.feature_names[a] < v.feature_names[b];
  });
  for (std::size_t i : order) {
    names_.push_back(v.feature_names[i]);
    scores_.push_back(v.scores[i]);
  }
  ranks_ = average_ranks(scores_);
}

std::vector<std::string> RankedList::top_k(std::size_t k) const {
  k = std::min(k, names_.size());
  return {names_.begin(), names_.begin() + static_cast<std::ptrdiff_t>(k)};
}

SharedScores shared_scores(const ImportanceVector& a, const ImportanceVector& b) {
  std::unordered_map<std::string_view, std::size_t> in_b;
  for (std::size_t j = 0; j < b.size(); ++j) in_b.emplace(b.feature_names[j], j);
  std::vector<std::pair<std::string_view, std::pair<std::size_t, std::size_t>>> hits;
  for (std::size_t i = 0; i < a.size(); ++i) {
    auto it = in_b.find(a.feature_names[i]);
    if (it != in_b.end()) hits.push_back({a.feature_names[i], {i, it->second}});
  }
  // Name order makes every metric independent of argument order.
  std::sort(hits.begin(), hits.end());
  SharedScores s;
  for (const auto& [name, idx] : hits) {
    s.names.emplace_back(name);
    s.a.push_back(a.scores[idx.first]);
    s.b.push_back(b.scores[idx.second]);
  }
  return s;
}

namespace {

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw UndefinedMetricError("rank correlation undefined: all scores tied on one side");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double spearman_of(const SharedScores& s) {
  if (s.names.size() < 2) {
    throw UndefinedMetricError(fmt::format("Spearman needs two shared features, found {}", s.names.size()));
  }
  return pearson(average_ranks(s.a), average_ranks(s.b));
}

int sgn(double v) { return (v > 0) - (v < 0); }

// Pairs tied within each group of equal values: sum t(t-1)/2.
double tied_pairs(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  double total = 0.0;
  for (std::size_t i = 0; i < v.size();) {
    std::size_t j = i;
    while (j + 1 < v.size() && v[j + 1] == v[i]) ++j;
    const double t = static_cast<double>(j - i + 1);
    total += t * (t - 1.0) / 2.0;
    i = j + 1;
  }
  return total;
}

ImportanceVector restrict_to(const ImportanceVector& v, const std::set<std::string>& keep) {
  ImportanceVector out;
  out.source = v.source;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (keep.count(v.feature_names[i])) {
      out.feature_names.push_back(v.feature_names[i]);
      out.scores.push_back(v.scores[i]);
    }
  }
  return out;
}

std::size_t overlap(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  const std::set<std::string> sa(a.begin(), a.end());
  std::size_t n = 0;
  for (const auto& x : b) n += sa.count(x);
  return n;
}

template <typename F>
std::optional<double> attempt(std::vector<std::string>& undefined, const char* name, F&& f) {
  try {
    return f();
  } catch (const UndefinedMetricError&) {
    undefined.emplace_back(name);
    return std::nullopt;
  }
}

}  // namespace

double spearman(const ImportanceVector& a, const ImportanceVector& b) {
  return spearman_of(shared_scores(a, b));
}

double robust_spearman_top10(const ImportanceVector& a, const ImportanceVector& b) {
  const auto ta = RankedList(a).top_k(10);
  const auto tb = RankedList(b).top_k(10);
  std::set<std::string> both;
  const std::set<std::string> sa(ta.begin(), ta.end());
  for (const auto& n : tb) {
    if (sa.count(n)) both.insert(n);
  }
  if (both.size() < 2) {
    throw UndefinedMetricError(fmt::format("robust Spearman needs two shared top-10 features, found {}", both.size()));
  }
  return spearman(restrict_to(a, both), restrict_to(b, both));
}

double kendall_tau(const ImportanceVector& a, const ImportanceVector& b) {
  const SharedScores s = shared_scores(a, b);
  const std::size_t n = s.names.size();
  if (n < 2) throw UndefinedMetricError(fmt::format("Kendall tau needs two shared features, found {}", n));
  // tau-b = S / sqrt((n0 - n1)(n0 - n2)), S = sum of sign products over pairs.
  double concordance = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) concordance += sgn(s.a[i] - s.a[j]) * sgn(s.b[i] - s.b[j]);
  }
  const double n0 = static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
  const double da = n0 - tied_pairs(s.a);
  const double db = n0 - tied_pairs(s.b);
  if (da == 0.0 || db == 0.0) throw UndefinedMetricError("Kendall tau undefined: all scores tied on one side");
  return std::clamp(concordance / std::sqrt(da * db), -1.0, 1.0);
}

TopKOverlap jaccard_topk(const ImportanceVector& a, const ImportanceVector& b, std::size_t k) {
  const std::size_t used = std::min({k, a.size(), b.size()});
  if (used == 0) throw UndefinedMetricError("Jaccard@k needs non-empty importance vectors");
  const auto ta = RankedList(a).top_k(used);
  const auto tb = RankedList(b).top_k(used);
  const std::size_t inter = overlap(ta, tb);
  const std::size_t uni = ta.size() + tb.size() - inter;
  return {static_cast<double>(inter) / static_cast<double>(uni), used};
}

PrecisionRecall precision_recall_top10(const ImportanceVector& fi, const ImportanceVector& shap) {
  const std::size_t used = std::min<std::size_t>({10, fi.size(), shap.size()});
  if (used == 0) throw UndefinedMetricError("precision/recall@10 needs non-empty importance vectors");
  const auto top_fi = RankedList(fi).top_k(used);
  const auto top_shap = RankedList(shap).top_k(used);
  const double inter = static_cast<double>(overlap(top_fi, top_shap));
  return {inter / static_cast<double>(top_fi.size()), inter / static_cast<double>(top_shap.size()), used};
}

double sign_consistency(const ImportanceVector& a, const ImportanceVector& b) {
  if (!a.signed_means || !b.signed_means) {
    throw SourceMismatchError("sign consistency needs mean signed SHAP values on both sides");
  }
  ImportanceVector sa = a, sb = b;
  sa.scores = *a.signed_means;
  sb.scores = *b.signed_means;
  const SharedScores s = shared_scores(sa, sb);
  if (s.names.empty()) throw UndefinedMetricError("sign consistency needs at least one shared feature");
  auto direction = [](double v) { return std::abs(v) < 1e-12 ? 0 : sgn(v); };
  std::size_t matches = 0;
  for (std::size_t i = 0; i < s.names.size(); ++i) matches += direction(s.a[i]) == direction(s.b[i]) ? 1 : 0;
  return static_cast<double>(matches) / static_cast<double>(s.names.size());
}

double mean_delta_abs_shap(const ImportanceVector& a, const ImportanceVector& b) {
  if (a.source != ImportanceSource::MeanAbsShap || b.source != ImportanceSource::MeanAbsShap) {
    throw SourceMismatchError("mean delta |SHAP| compares two mean |SHAP| vectors");
  }
  const SharedScores s = shared_scores(a, b);
  if (s.names.empty()) throw UndefinedMetricError("mean delta |SHAP| needs at least one shared feature");
  double total = 0.0;
  for (std::size_t i = 0; i < s.names.size(); ++i) total += std::abs(s.a[i] - s.b[i]);
  return total / static_cast<double>(s.names.size());
}

std::size_t contribution_slot(DomainTag tag) {
  switch (tag) {
    case DomainTag::Cognitive: return 0;
    case DomainTag::Functional: return 1;
    case DomainTag::Packet:
    case DomainTag::Language: return 2;
    case DomainTag::Genetic: return 3;
    case DomainTag::Other: return 4;
  }
  return 4;
}

ContributionVector domain_contributions(const ImportanceVector& mean_abs_shap, const DomainMap& domains) {
  if (mean_abs_shap.source != ImportanceSource::MeanAbsShap) {
    throw SourceMismatchError("domain contributions are computed from mean |SHAP| values");
  }
  double total = 0.0;
  ContributionVector cv;
  for (std::size_t j = 0; j < mean_abs_shap.size(); ++j) {
    auto it = domains.find(mean_abs_shap.feature_names[j]);
    const DomainTag tag = it == domains.end() ? DomainTag::Other : it->second;
    cv.shares[contribution_slot(tag)] += mean_abs_shap.scores[j];
    total += mean_abs_shap.scores[j];
  }
  if (!(total > 0.0)) throw UndefinedMetricError("domain contributions undefined: total |SHAP| is zero");
  for (double& s : cv.shares) s /= total;
  return cv;
}

ContributionVector domain_contributions(const AttributionMatrix& a, const DomainMap& domains) {
  return domain_contributions(summarize(a), domains);
}

std::string_view to_string(MetricBasis b) {
  switch (b) {
    case MetricBasis::FI_SHAP: return "FI-SHAP";
    case MetricBasis::SHAP_SHAP: return "SHAP-SHAP";
    case MetricBasis::FI_FI: return "FI-FI";
  }
  return "?";
}

MetricBasis parse_basis(std::string_view s) {
  if (s == "FI-SHAP") return MetricBasis::FI_SHAP;
  if (s == "SHAP-SHAP") return MetricBasis::SHAP_SHAP;
  if (s == "FI-FI") return MetricBasis::FI_FI;
  throw ParseError(fmt::format("unknown metric basis '{}'", s));
}

bool StabilityRecord::has_undefined() const {
  switch (basis) {
    case MetricBasis::FI_SHAP:
      return !rho || !robust_rho || !tau || !j10 || !precision10 || !recall10;
    case MetricBasis::FI_FI:
      return !rho || !tau || !j10;
    case MetricBasis::SHAP_SHAP: {
      if (!rho || !tau || !j10 || !j20 || !sign_consistency) return true;
      // Cross-task rows also carry magnitude and domain metrics.
      const bool cross_task = mean_delta_abs_shap || contrib_diag || contrib_prog;
      return cross_task && (!mean_delta_abs_shap || !contrib_diag || !contrib_prog);
    }
  }
  return false;
}

StabilityRecord within_model_analysis(const ImportanceVector& fi, const ImportanceVector& shap_summary) {
  if (fi.source != ImportanceSource::FI || shap_summary.source != ImportanceSource::MeanAbsShap) {
    throw SourceMismatchError("within-model analysis compares an FI vector with a mean |SHAP| vector");
  }
  std::vector<std::string> undefined;
  StabilityRecord r;
  r.basis = MetricBasis::FI_SHAP;
  r.n_shared_features = shared_scores(fi, shap_summary).names.size();
  r.rho = attempt(undefined, "rho", [&] { return spearman(fi, shap_summary); });
  r.robust_rho = attempt(undefined, "robust_rho", [&] { return robust_spearman_top10(fi, shap_summary); });
  r.tau = attempt(undefined, "tau", [&] { return kendall_tau(fi, shap_summary); });
  r.j10 = attempt(undefined, "j10", [&] {
    const auto j = jaccard_topk(fi, shap_summary, 10);
    r.j10_k = j.k;
    return j.value;
  });
  try {
    const auto pr = precision_recall_top10(fi, shap_summary);
    r.precision10 = pr.precision;
    r.recall10 = pr.recall;
  } catch (const UndefinedMetricError&) {
  }
  return r;
}

StabilityRecord cross_scenario_analysis(const ImportanceVector& shap_a, const ImportanceVector& shap_b) {
  std::vector<std::string> undefined;
  StabilityRecord r;
  r.basis = MetricBasis::SHAP_SHAP;
  r.n_shared_features = shared_scores(shap_a, shap_b).names.size();
  r.rho = attempt(undefined, "rho", [&] { return spearman(shap_a, shap_b); });
  r.tau = attempt(undefined, "tau", [&] { return kendall_tau(shap_a, shap_b); });
  r.j10 = attempt(undefined, "j10", [&] {
    const auto j = jaccard_topk(shap_a, shap_b, 10);
    r.j10_k = j.k;
    return j.value;
  });
  r.j20 = attempt(undefined, "j20", [&] {
    const auto j = jaccard_topk(shap_a, shap_b, 20);
    r.j20_k = j.k;
    return j.value;
  });
  r.sign_consistency = attempt(undefined, "sign", [&] { return sign_consistency(shap_a, shap_b); });
  return r;
}

CrossTaskRecord cross_task_analysis(const ImportanceVector& fi_diag, const ImportanceVector& shap_diag,
                                    const ImportanceVector& fi_prog, const ImportanceVector& shap_prog,
                                    const DomainMap& domains) {
  std::vector<std::string> undefined;
  CrossTaskRecord out;
  auto& fi = out.fi;
  fi.basis = MetricBasis::FI_FI;
  fi.n_shared_features = shared_scores(fi_diag, fi_prog).names.size();
  fi.rho = attempt(undefined, "rho", [&] { return spearman(fi_diag, fi_prog); });
  fi.tau = attempt(undefined, "tau", [&] { return kendall_tau(fi_diag, fi_prog); });
  fi.j10 = attempt(undefined, "j10", [&] {
    const auto j = jaccard_topk(fi_diag, fi_prog, 10);
    fi.j10_k = j.k;
    return j.value;
  });

  out.shap = cross_scenario_analysis(shap_diag, shap_prog);
  auto& sh = out.shap;
  sh.mean_delta_abs_shap = attempt(undefined, "delta", [&] { return mean_delta_abs_shap(shap_diag, shap_prog); });
  try {
    sh.contrib_diag = domain_contributions(shap_diag, domains);
  } catch (const UndefinedMetricError&) {
  }
  try {
    sh.contrib_prog = domain_contributions(shap_prog, domains);
  } catch (const UndefinedMetricError&) {
  }
  return out;
}

}  // namespace xstab
