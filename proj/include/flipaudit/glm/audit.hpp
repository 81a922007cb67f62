#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "flipaudit/core/dataset.hpp"
#include "flipaudit/glm/logistic.hpp"
#include "flipaudit/metrics/misclass.hpp"

namespace flipaudit::glm {

enum class FeatureKind { Clinical, Findings, AgeComorbidity };

std::string_view feature_kind_name(FeatureKind kind);

struct DesignSpec {
  FeatureKind kind = FeatureKind::Clinical;
  Task task = Task::Atelectasis;
  std::vector<std::string> feature_names;
  FindingSet excluded;  // findings mode only
};

DesignSpec design_spec(const Dataset& dataset, FeatureKind kind, Task task);
DesignMatrix build_design(const Dataset& dataset, const DesignSpec& spec);

// Positive findings other than No Finding and the task's own finding.
int comorbidity_count(const StudyRecord& study, Task task);

// Regress misclassification on the five clinical covariates (age in raw years).
FitReport audit_clinical(const Dataset& dataset, const metrics::MisclassMatrix& misclass,
                         const FitConfig& config = {});
// Regress misclassification on finding indicators, minus the task's hierarchy exclusions.
FitReport audit_findings(const Dataset& dataset, const metrics::MisclassMatrix& misclass,
                         const FitConfig& config = {});
// Joint model of age and comorbidity count.
FitReport audit_age_comorbidity(const Dataset& dataset, const metrics::MisclassMatrix& misclass,
                                const FitConfig& config = {});

struct AggregateRow {
  Task task = Task::Atelectasis;
  std::string feature;
  std::size_t n_models = 0;
  std::size_t n_significant_models = 0;
  double mean_odds_ratio = 0.0;
  double agg_ci_lower = 0.0;
  double agg_ci_upper = 0.0;
};

// Averages the per-model Wald bounds to get the aggregate interval.
// Swap this one function to change the aggregation scheme.
void aggregate_interval(std::span<const FeatureEstimate* const> estimates, AggregateRow& row);

// One row per non-intercept feature. All reports must share the feature list.
std::vector<AggregateRow> aggregate_across_models(std::span<const FitReport> reports, Task task);

}  // namespace flipaudit::glm
