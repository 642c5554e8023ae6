#pragma once

// Report tables populated with published values (within-model, cross-scenario
// and cross-task shapes). Used only to exercise emit -> parse round trips.

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "xstab/report.hpp"

namespace xstab::testing {

inline StabilityTable published_within_table() {
  struct Row {
    const char* scenario;
    const char* task;
    double rho, robust, j10, tau, precision, recall;
  };
  const Row rows[] = {
      {"NC vs AD", "Diagnosis", 0.60, 0.72, 0.53, 0.43, 0.7, 0.7},
      {"NC vs AD", "Prognosis", 0.75, 0.75, 0.70, 0.56, 0.8, 0.8},
      {"NC vs MCI", "Diagnosis", 0.54, 0.64, 0.43, 0.46, 0.6, 0.6},
      {"NC vs MCI", "Prognosis", 0.67, 0.94, 0.43, 0.83, 1.0, 1.0},
      {"MCI vs AD", "Diagnosis", 0.5, 0.95, 0.53, 0.85, 0.9, 0.9},
      {"MCI vs AD", "Prognosis", 0.67, 0.87, 1.00, 0.72, 0.8, 0.8},
      {"NC vs MCI vs AD", "Diagnosis", 0.95, 0.95, 0.82, 0.48, 0.5, 0.5},
      {"NC vs MCI vs AD", "Prognosis", 0.76, 0.95, 0.67, 0.83, 1.0, 1.0},
  };
  StabilityTable t{TableKind::Within, {}};
  for (const auto& r : rows) {
    StabilityRecord rec;
    rec.task = r.task;
    rec.left = r.scenario;
    rec.basis = MetricBasis::FI_SHAP;
    rec.rho = r.rho;
    rec.robust_rho = r.robust;
    rec.j10 = r.j10;
    rec.tau = r.tau;
    rec.precision10 = r.precision;
    rec.recall10 = r.recall;
    t.rows.push_back(rec);
  }
  return t;
}

inline StabilityTable published_cross_scenario_table() {
  struct Row {
    const char* left;
    const char* right;
    std::array<double, 4> diag;  // rho, J@10, J@20, tau
    std::array<double, 4> prog;
  };
  const Row rows[] = {
      {"NC vs AD", "NC vs MCI", {0.49, 0.53, 0.72, 0.38}, {-0.14, 0.25, 0.60, -0.12}},
      {"NC vs AD", "MCI vs AD", {0.92, 0.66, 0.52, 0.79}, {0.79, 0.66, 0.68, 0.61}},
      {"NC vs AD", "NC vs MCI vs AD", {0.84, 0.66, 0.81, 0.66}, {0.66, 0.53, 0.72, 0.53}},
      {"NC vs MCI", "MCI vs AD", {0.69, 0.42, 0.52, 0.49}, {0.28, 0.33, 0.72, 0.13}},
      {"MCI vs AD", "NC vs MCI vs AD", {0.85, 0.66, 0.58, 0.64}, {0.8, 0.53, 0.72, 0.63}},
  };
  StabilityTable t{TableKind::CrossScenario, {}};
  for (const char* task : {"Diagnosis", "Prognosis"}) {
    for (const auto& r : rows) {
      const auto& v = std::string(task) == "Diagnosis" ? r.diag : r.prog;
      StabilityRecord rec;
      rec.task = task;
      rec.left = r.left;
      rec.right = r.right;
      rec.basis = MetricBasis::SHAP_SHAP;
      rec.rho = v[0];
      rec.j10 = v[1];
      rec.j20 = v[2];
      rec.tau = v[3];
      // Sign consistency is not published per pair; leave it absent.
      t.rows.push_back(rec);
    }
  }
  return t;
}

inline StabilityTable published_cross_task_table() {
  struct Row {
    const char* scenario;
    std::array<double, 2> rho, tau, j10;
    double j20, sign;
    std::array<double, 5> diag, prog;
    double delta;
  };
  const Row rows[] = {
      {"NC vs AD", {-0.26, 0.91}, {-0.20, 0.78}, {0.4, 0.66}, 0.40, 1.0, {0.47, 0.27, 0.08, 0.16, 0},
       {0.59, 0.25, 0, 0.15, 0}, 0.022},
      {"NC vs MCI", {1.0, 0.39}, {1.0, 0.24}, {0.4, 0.53}, 0.46, 1.0, {0.68, 0.21, 0, 0.14, 0},
       {0.62, 0.18, 0, 0.19, 0}, 0.019},
      {"MCI vs AD", {-0.6, 0.87}, {-0.67, 0.86}, {0.4, 1.0}, 0.72, 1.0, {0.51, 0.17, 0.06, 0.25, 0},
       {0.38, 0.18, 0, 0.33, 0}, 0.012},
      {"NC vs MCI vs AD", {0.93, 0.61}, {0.93, 0.4}, {0.8, 0.70}, 0.46, 1.0, {0.44, 0.27, 0.07, 0.22, 0},
       {0.38, 0.27, 0, 0.35, 0}, 0.018},
  };
  StabilityTable t{TableKind::CrossTask, {}};
  for (const auto& r : rows) {
    StabilityRecord fi, shap;
    fi.left = shap.left = r.scenario;
    fi.basis = MetricBasis::FI_FI;
    fi.rho = r.rho[0];
    fi.tau = r.tau[0];
    fi.j10 = r.j10[0];
    shap.basis = MetricBasis::SHAP_SHAP;
    shap.rho = r.rho[1];
    shap.tau = r.tau[1];
    shap.j10 = r.j10[1];
    shap.j20 = r.j20;
    shap.sign_consistency = r.sign;
    shap.contrib_diag = ContributionVector{r.diag};
    shap.contrib_prog = ContributionVector{r.prog};
    shap.mean_delta_abs_shap = r.delta;
    t.rows.push_back(fi);
    t.rows.push_back(shap);
  }
  return t;
}

}  // namespace xstab::testing
