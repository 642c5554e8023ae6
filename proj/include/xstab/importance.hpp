#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace xstab {

enum class ImportanceSource { FI, MeanAbsShap };

std::string_view to_string(ImportanceSource s);

// One score per feature. Permutation importance (FI) or mean |SHAP|; the
// latter also carries the mean signed attribution per feature.
struct ImportanceVector {
  std::vector<std::string> feature_names;
  std::vector<double> scores;
  ImportanceSource source = ImportanceSource::FI;
  std::optional<std::vector<double>> signed_means;

  // Optional provenance used to label report rows.
  std::string task;
  std::string scenario;

  std::size_t size() const { return feature_names.size(); }
  void validate() const;
};

std::string importance_to_json(const ImportanceVector& v);
ImportanceVector importance_from_json(std::string_view text);

}  // namespace xstab
