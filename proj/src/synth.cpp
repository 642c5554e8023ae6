#include <cmath>
#include <string>

#include <fmt/format.h>

#include "json.hpp"
#include "xstab/common.hpp"
#include "xstab/error.hpp"
#include "xstab/tabular.hpp"

namespace xstab {

using nlohmann::json;

namespace {

// Clinical rating columns. Values rise with impairment; `scale` is the
// per-visit noise standard deviation and the unit the label means move in.
struct RatingColumn {
  const char* name;
  DomainTag domain;
  double center;
  double scale;
};

constexpr RatingColumn kRatings[] = {
    {"MEMORY", DomainTag::Cognitive, 0.5, 0.5},   {"ORIENT", DomainTag::Cognitive, 0.4, 0.45},
    {"JUDGMENT", DomainTag::Cognitive, 0.5, 0.5}, {"COMMUN", DomainTag::Cognitive, 0.3, 0.4},
    {"BILLS", DomainTag::Functional, 0.6, 0.8},   {"TAXES", DomainTag::Functional, 0.8, 0.9},
    {"PAYATTN", DomainTag::Functional, 0.5, 0.7}, {"TRAVEL", DomainTag::Functional, 0.4, 0.6},
};

constexpr const char* kGenetic[] = {"ADGCEXR", "NGDSGWAC", "NGDSEXAC"};
constexpr double kGeneticRate[] = {0.35, 0.25, 0.1};

// Mean shift between adjacent stages, in units of the column's scale.
constexpr double kStageShift = 2.2;

}  // namespace

void SynthConfig::validate() const {
  if (n_subjects == 0) throw ConfigError("n_subjects must be positive");
  if (visits_min == 0 || visits_max < visits_min) throw ConfigError("visit range must satisfy 1 <= min <= max");
  double total = 0.0;
  for (double p : label_prior) {
    if (!(p >= 0.0)) throw ConfigError("label_prior entries must be non-negative");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ConfigError(fmt::format("label_prior sums to {}, expected 1", total));
  if (!(separability >= 0.0 && separability <= 1.0)) throw ConfigError("separability must lie in [0, 1]");
  if (!(missing_rate >= 0.0 && missing_rate < 1.0)) throw ConfigError("missing_rate must lie in [0, 1)");
  for (const auto& [name, rate] : column_missing_rate) {
    if (!(rate >= 0.0 && rate < 1.0)) throw ConfigError(fmt::format("missing rate for '{}' must lie in [0, 1)", name));
  }
  if (!(progression_rate >= 0.0 && progression_rate <= 1.0)) throw ConfigError("progression_rate must lie in [0, 1]");
}

std::string SynthConfig::to_json_text() const {
  json j;
  j["n_subjects"] = n_subjects;
  j["visits_per_subject"] = {visits_min, visits_max};
  j["label_prior"] = {{"NC", label_prior[0]}, {"MCI", label_prior[1]}, {"AD", label_prior[2]}};
  j["separability"] = separability;
  j["missing_rate"] = missing_rate;
  j["column_missing_rate"] = column_missing_rate;
  j["progression_rate"] = progression_rate;
  j["seed"] = seed;
  return j.dump(2) + "\n";
}

SynthConfig SynthConfig::from_json_text(std::string_view text) {
  SynthConfig c;
  try {
    const json j = json::parse(text);
    c.n_subjects = j.value("n_subjects", c.n_subjects);
    if (j.contains("visits_per_subject")) {
      const auto& v = j.at("visits_per_subject");
      c.visits_min = v.at(0).get<std::size_t>();
      c.visits_max = v.at(1).get<std::size_t>();
    }
    if (j.contains("label_prior")) {
      const auto& p = j.at("label_prior");
      c.label_prior = {p.at("NC").get<double>(), p.at("MCI").get<double>(), p.at("AD").get<double>()};
    }
    c.separability = j.value("separability", c.separability);
    c.missing_rate = j.value("missing_rate", c.missing_rate);
    if (j.contains("column_missing_rate")) {
      c.column_missing_rate = j.at("column_missing_rate").get<std::map<std::string, double>>();
    }
    c.progression_rate = j.value("progression_rate", c.progression_rate);
    c.seed = j.value("seed", c.seed);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid synthetic config: ") + e.what());
  }
  c.validate();
  return c;
}

Dataset generate_synthetic(const SynthConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);

  Dataset d;
  for (const auto& r : kRatings) d.columns.push_back(Column{r.name, r.domain, NumericCells{}});
  d.columns.push_back(Column{"PACKET", DomainTag::Packet, CategoricalCells{}});
  d.columns.push_back(Column{"MOCALANX", DomainTag::Language, CategoricalCells{}});
  for (const char* g : kGenetic) d.columns.push_back(Column{g, DomainTag::Genetic, NumericCells{}});
  d.columns.push_back(Column{"EDUC", DomainTag::Other, NumericCells{}});

  const int id_width = static_cast<int>(std::to_string(cfg.n_subjects).size());
  const std::size_t n_ratings = std::size(kRatings);

  for (std::size_t s = 0; s < cfg.n_subjects; ++s) {
    const std::string subject = fmt::format("S{:0{}}", s + 1, id_width);
    const std::size_t n_visits = cfg.visits_min + rng.index(cfg.visits_max - cfg.visits_min + 1);

    const double u = rng.uniform();
    int stage = u < cfg.label_prior[0] ? 0 : (u < cfg.label_prior[0] + cfg.label_prior[1] ? 1 : 2);
    double age = rng.uniform(60.0, 85.0);
    const std::string language = rng.uniform() < 0.85 ? "1" : "2";
    double genetic[std::size(kGenetic)];
    for (std::size_t g = 0; g < std::size(kGenetic); ++g) genetic[g] = rng.uniform() < kGeneticRate[g] ? 1.0 : 0.0;
    const double educ = std::round(std::clamp(16.0 + 3.0 * rng.normal(), 6.0, 24.0));
    // Per-subject offset shared by all visits; together with visit noise the
    // per-visit deviation is one scale unit.
    double subject_effect[std::size(kRatings)];
    for (std::size_t k = 0; k < n_ratings; ++k) subject_effect[k] = rng.normal();

    for (std::size_t v = 0; v < n_visits; ++v) {
      if (v > 0) {
        age += 1.0 + rng.uniform(-0.25, 0.25);
        if (stage < 2 && rng.uniform() < cfg.progression_rate) ++stage;
      }
      d.subject_ids.push_back(subject);
      d.visit_index.push_back(static_cast<std::int32_t>(v));
      d.visit_age_years.push_back(age);
      d.labels.push_back(static_cast<ClassLabel>(stage));

      for (std::size_t k = 0; k < n_ratings; ++k) {
        const auto& r = kRatings[k];
        const double z = cfg.separability * kStageShift * stage + 0.6 * subject_effect[k] + 0.8 * rng.normal();
        std::get<NumericCells>(d.columns[k].cells).push_back(r.center + r.scale * z);
      }
      std::string packet = "I";
      if (v > 0) packet = rng.uniform() < 0.8 ? "F" : "T";
      std::get<CategoricalCells>(d.columns[n_ratings].cells).push_back(packet);
      std::get<CategoricalCells>(d.columns[n_ratings + 1].cells).push_back(language);
      for (std::size_t g = 0; g < std::size(kGenetic); ++g) {
        std::get<NumericCells>(d.columns[n_ratings + 2 + g].cells).push_back(genetic[g]);
      }
      std::get<NumericCells>(d.columns.back().cells).push_back(educ);
    }
  }

  // Missingness is injected in a separate pass so the value stream above does
  // not depend on the missing rates.
  Rng miss_rng(derive_seed(cfg.seed, {0x6d697373}));
  for (auto& c : d.columns) {
    auto it = cfg.column_missing_rate.find(c.name);
    const double rate = it != cfg.column_missing_rate.end() ? it->second : cfg.missing_rate;
    std::visit(
        [&](auto& cells) {
          for (auto& cell : cells) {
            const double draw = miss_rng.uniform();
            if (rate > 0.0 && draw < rate) cell.reset();
          }
        },
        c.cells);
  }
  d.validate();
  return d;
}

}  // namespace xstab
