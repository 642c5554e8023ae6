#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "xstab/importance.hpp"
#include "xstab/shap.hpp"
#include "xstab/tabular.hpp"

namespace xstab {

// Features sorted by descending score, name ascending on ties. Ranks use the
// average-rank convention, 1 = most important.
class RankedList {
 public:
  explicit RankedList(const ImportanceVector& v);

  const std::vector<std::string>& names() const { return names_; }
  const std::vector<double>& scores() const { return scores_; }
  const std::vector<double>& ranks() const { return ranks_; }
  // The k leading names (fewer if the list is shorter).
  std::vector<std::string> top_k(std::size_t k) const;

 private:
  std::vector<std::string> names_;
  std::vector<double> scores_;
  std::vector<double> ranks_;
};

// Average ranks (1-based, descending scores) of an arbitrary score sequence.
std::vector<double> average_ranks(const std::vector<double>& scores);

// Score pairs for the features present in both vectors, in a's order.
struct SharedScores {
  std::vector<std::string> names;
  std::vector<double> a;
  std::vector<double> b;
};
SharedScores shared_scores(const ImportanceVector& a, const ImportanceVector& b);

// All pairwise metrics restrict to shared features first. Degenerate inputs
// throw UndefinedMetricError.
double spearman(const ImportanceVector& a, const ImportanceVector& b);
double robust_spearman_top10(const ImportanceVector& a, const ImportanceVector& b);
double kendall_tau(const ImportanceVector& a, const ImportanceVector& b);

struct TopKOverlap {
  double value = 0.0;
  std::size_t k = 0;  // k actually used after clamping to the shorter list
};
// Top-k is taken on each full vector before any intersection.
TopKOverlap jaccard_topk(const ImportanceVector& a, const ImportanceVector& b, std::size_t k);

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
  std::size_t k = 0;
};
PrecisionRecall precision_recall_top10(const ImportanceVector& fi, const ImportanceVector& shap);

// Share of shared features whose mean signed SHAP has the same sign;
// |mean| < 1e-12 counts as zero and zero matches zero.
double sign_consistency(const ImportanceVector& a, const ImportanceVector& b);
double mean_delta_abs_shap(const ImportanceVector& a, const ImportanceVector& b);

// Domain shares of total mean |SHAP|: cognitive (CDR), functional (FAQ),
// packet (language folded in), genetic, other.
struct ContributionVector {
  std::array<double, 5> shares{};

  double sum() const { return shares[0] + shares[1] + shares[2] + shares[3] + shares[4]; }
  bool operator==(const ContributionVector&) const = default;
};

inline constexpr const char* kContributionSlots[5] = {"cognitive", "functional", "packet", "genetic", "other"};

std::size_t contribution_slot(DomainTag tag);

using DomainMap = std::map<std::string, DomainTag>;

ContributionVector domain_contributions(const ImportanceVector& mean_abs_shap, const DomainMap& domains);
ContributionVector domain_contributions(const AttributionMatrix& a, const DomainMap& domains);

enum class MetricBasis { FI_SHAP, SHAP_SHAP, FI_FI };
std::string_view to_string(MetricBasis b);
MetricBasis parse_basis(std::string_view s);

// One report row. Absent optionals mean "not computable" (or not part of the
// table the row belongs to). Within-model rows use left = scenario and task;
// cross-scenario rows compare left and right within task; cross-task rows
// carry the scenario in left and leave task empty.
struct StabilityRecord {
  std::string task;
  std::string left;
  std::string right;
  MetricBasis basis = MetricBasis::SHAP_SHAP;
  std::optional<double> rho;
  std::optional<double> robust_rho;
  std::optional<double> tau;
  std::optional<double> j10;
  std::optional<double> j20;
  std::optional<double> precision10;
  std::optional<double> recall10;
  std::optional<double> sign_consistency;
  std::optional<double> mean_delta_abs_shap;
  std::optional<ContributionVector> contrib_diag;
  std::optional<ContributionVector> contrib_prog;
  std::size_t n_shared_features = 0;
  std::size_t j10_k = 0;
  std::size_t j20_k = 0;

  bool operator==(const StabilityRecord&) const = default;
  // True when a metric the row's table defines could not be computed.
  bool has_undefined() const;
};

// FI vs mean |SHAP| of one model.
StabilityRecord within_model_analysis(const ImportanceVector& fi, const ImportanceVector& shap_summary);
// Mean |SHAP| summaries of two models from the same task.
StabilityRecord cross_scenario_analysis(const ImportanceVector& shap_a, const ImportanceVector& shap_b);

struct CrossTaskRecord {
  StabilityRecord fi;    // FI-FI: rho, tau, J@10
  StabilityRecord shap;  // SHAP-SHAP: rho, tau, J@10, J@20, sign, mean delta, contributions
  bool operator==(const CrossTaskRecord&) const = default;
};

CrossTaskRecord cross_task_analysis(const ImportanceVector& fi_diag, const ImportanceVector& shap_diag,
                                    const ImportanceVector& fi_prog, const ImportanceVector& shap_prog,
                                    const DomainMap& domains);

}  // namespace xstab
