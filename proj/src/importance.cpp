#include "xstab/importance.hpp"

#include <cmath>
#include <set>

#include <fmt/format.h>

#include "json.hpp"
#include "xstab/error.hpp"

namespace xstab {

using nlohmann::json;

std::string_view to_string(ImportanceSource s) {
  return s == ImportanceSource::FI ? "fi" : "mean_abs_shap";
}

void ImportanceVector::validate() const {
  if (scores.size() != feature_names.size()) throw ParseError("importance vector: names and scores differ in length");
  if (signed_means && signed_means->size() != feature_names.size()) {
    throw ParseError("importance vector: signed_means length mismatch");
  }
  std::set<std::string_view> seen;
  for (const auto& n : feature_names) {
    if (!seen.insert(n).second) throw ParseError(fmt::format("importance vector: duplicate feature '{}'", n));
  }
  for (double s : scores) {
    if (!std::isfinite(s)) throw ParseError("importance vector: non-finite score");
    if (source == ImportanceSource::MeanAbsShap && s < 0.0) {
      throw ParseError("importance vector: mean |SHAP| scores must be non-negative");
    }
  }
}

std::string importance_to_json(const ImportanceVector& v) {
  json j;
  j["feature_names"] = v.feature_names;
  j["scores"] = v.scores;
  j["source"] = std::string(to_string(v.source));
  if (v.signed_means) j["signed_means"] = *v.signed_means;
  if (!v.task.empty()) j["task"] = v.task;
  if (!v.scenario.empty()) j["scenario"] = v.scenario;
  return j.dump(2) + "\n";
}

ImportanceVector importance_from_json(std::string_view text) {
  ImportanceVector v;
  try {
    const json j = json::parse(text);
    v.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    v.scores = j.at("scores").get<std::vector<double>>();
    const std::string src = j.value("source", "fi");
    if (src == "fi") {
      v.source = ImportanceSource::FI;
    } else if (src == "mean_abs_shap") {
      v.source = ImportanceSource::MeanAbsShap;
    } else {
      throw ParseError(fmt::format("importance vector: unknown source '{}'", src));
    }
    if (j.contains("signed_means")) v.signed_means = j.at("signed_means").get<std::vector<double>>();
    v.task = j.value("task", "");
    v.scenario = j.value("scenario", "");
  } catch (const json::exception& e) {
    throw ParseError(std::string("importance vector: ") + e.what());
  }
  v.validate();
  return v;
}

}  // namespace xstab
