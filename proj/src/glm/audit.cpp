#include "flipaudit/glm/audit.hpp"

#include <fmt/format.h>

#include "flipaudit/error.hpp"

namespace flipaudit::glm {

std::string_view feature_kind_name(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::Clinical:
      return "clinical";
    case FeatureKind::Findings:
      return "findings";
    case FeatureKind::AgeComorbidity:
      return "age_comorbidity";
  }
  return "?";
}

int comorbidity_count(const StudyRecord& study, Task task) {
  int count = 0;
  for (std::size_t f = 0; f < kNumFindings; ++f) {
    const Finding finding = finding_at(f);
    if (finding == Finding::NoFinding || finding == task_finding(task)) continue;
    count += study.labels[f];
  }
  return count;
}

DesignSpec design_spec(const Dataset& dataset, FeatureKind kind, Task task) {
  DesignSpec spec;
  spec.kind = kind;
  spec.task = task;
  switch (kind) {
    case FeatureKind::Clinical:
      for (auto name : kClinicalNames) spec.feature_names.emplace_back(name);
      break;
    case FeatureKind::Findings:
      spec.excluded = dataset.hierarchy().excluded_features(task);
      for (std::size_t f = 0; f < kNumFindings; ++f) {
        if (!spec.excluded.test(f)) spec.feature_names.emplace_back(finding_name(finding_at(f)));
      }
      break;
    case FeatureKind::AgeComorbidity:
      spec.feature_names = {"age", "comorbidity_count"};
      break;
  }
  return spec;
}

DesignMatrix build_design(const Dataset& dataset, const DesignSpec& spec) {
  const std::size_t n = dataset.size();
  DesignMatrix x;
  x.rows = n;
  switch (spec.kind) {
    case FeatureKind::Clinical:
      for (std::size_t k = 0; k < kNumClinical; ++k) {
        std::vector<double> col(n);
        for (std::size_t i = 0; i < n; ++i) col[i] = dataset[i].clinical()[k];
        x.add_column(spec.feature_names[k], std::move(col));
      }
      break;
    case FeatureKind::Findings:
      for (std::size_t f = 0; f < kNumFindings; ++f) {
        if (spec.excluded.test(f)) continue;
        std::vector<double> col(n);
        for (std::size_t i = 0; i < n; ++i) col[i] = dataset[i].labels[f];
        x.add_column(std::string(finding_name(finding_at(f))), std::move(col));
      }
      break;
    case FeatureKind::AgeComorbidity: {
      std::vector<double> age(n), count(n);
      for (std::size_t i = 0; i < n; ++i) {
        age[i] = dataset[i].age;
        count[i] = comorbidity_count(dataset[i], spec.task);
      }
      x.add_column("age", std::move(age));
      x.add_column("comorbidity_count", std::move(count));
      break;
    }
  }
  return x;
}

namespace {

FitReport audit(const Dataset& dataset, const metrics::MisclassMatrix& misclass, FeatureKind kind,
                const FitConfig& config) {
  if (misclass.misclassified.size() != dataset.size()) {
    throw InputError(fmt::format("misclassification vector has {} entries for {} studies",
                                 misclass.misclassified.size(), dataset.size()));
  }
  const DesignSpec spec = design_spec(dataset, kind, misclass.task);
  try {
    return fit_logistic(build_design(dataset, spec), misclass.misclassified, config);
  } catch (const SingularDesignError& e) {
    throw SingularDesignError(fmt::format("{} audit of model '{}' on {}: {}", feature_kind_name(kind),
                                          misclass.model_id, task_name(misclass.task), e.what()));
  }
}

}  // namespace

FitReport audit_clinical(const Dataset& dataset, const metrics::MisclassMatrix& misclass,
                         const FitConfig& config) {
  return audit(dataset, misclass, FeatureKind::Clinical, config);
}

FitReport audit_findings(const Dataset& dataset, const metrics::MisclassMatrix& misclass,
                         const FitConfig& config) {
  return audit(dataset, misclass, FeatureKind::Findings, config);
}

FitReport audit_age_comorbidity(const Dataset& dataset, const metrics::MisclassMatrix& misclass,
                                const FitConfig& config) {
  return audit(dataset, misclass, FeatureKind::AgeComorbidity, config);
}

void aggregate_interval(std::span<const FeatureEstimate* const> estimates, AggregateRow& row) {
  double lo = 0.0, hi = 0.0;
  for (const auto* e : estimates) {
    lo += e->or_ci_lower;
    hi += e->or_ci_upper;
  }
  row.agg_ci_lower = lo / static_cast<double>(estimates.size());
  row.agg_ci_upper = hi / static_cast<double>(estimates.size());
}

std::vector<AggregateRow> aggregate_across_models(std::span<const FitReport> reports, Task task) {
  if (reports.empty()) throw InputError("aggregate_across_models: no reports");
  const auto& first = reports.front().features;
  for (const auto& r : reports) {
    bool same = r.features.size() == first.size();
    for (std::size_t j = 0; same && j < first.size(); ++j) same = r.features[j].name == first[j].name;
    if (!same) throw InputError("aggregate_across_models: reports have different feature sets");
  }

  std::vector<AggregateRow> rows;
  for (std::size_t j = 0; j < first.size(); ++j) {
    if (first[j].name == kInterceptName) continue;
    AggregateRow row;
    row.task = task;
    row.feature = first[j].name;
    row.n_models = reports.size();
    std::vector<const FeatureEstimate*> estimates;
    double or_sum = 0.0;
    for (const auto& r : reports) {
      const FeatureEstimate& e = r.features[j];
      estimates.push_back(&e);
      or_sum += e.odds_ratio;
      if (e.significant()) ++row.n_significant_models;
    }
    row.mean_odds_ratio = or_sum / static_cast<double>(reports.size());
    aggregate_interval(estimates, row);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace flipaudit::glm
