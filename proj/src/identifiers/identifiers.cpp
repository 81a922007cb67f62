#include "flipaudit/identifiers/identifiers.hpp"

#include <algorithm>
#include <map>

#include <fmt/format.h>

#include "flipaudit/core/splits.hpp"
#include "flipaudit/error.hpp"
#include "flipaudit/util/parallel.hpp"
#include "flipaudit/util/seed.hpp"

namespace flipaudit::identify {

std::string_view kind_name(IdentifierKind kind) {
  switch (kind) {
    case IdentifierKind::Naive:
      return "naive";
    case IdentifierKind::ClinicalOnly:
      return "clinical_only";
    case IdentifierKind::SameLabel:
      return "same_label";
    case IdentifierKind::AllLabels:
      return "all_labels";
  }
  return "?";
}

std::optional<IdentifierKind> parse_kind(std::string_view name) {
  for (auto k : kAllKinds) {
    if (kind_name(k) == name) return k;
  }
  return std::nullopt;
}

std::size_t feature_count(IdentifierKind kind) {
  switch (kind) {
    case IdentifierKind::Naive:
      return 1;
    case IdentifierKind::ClinicalOnly:
      return kNumClinical;
    case IdentifierKind::SameLabel:
      return kNumClinical + 1;
    case IdentifierKind::AllLabels:
      return kNumClinical + kNumTasks;
  }
  return 0;
}

namespace {

// Task order for the score block: the task itself first, then the rest.
std::vector<Task> score_block(IdentifierKind kind, Task task) {
  std::vector<Task> out;
  if (kind == IdentifierKind::SameLabel || kind == IdentifierKind::AllLabels ||
      kind == IdentifierKind::Naive) {
    out.push_back(task);
  }
  if (kind == IdentifierKind::AllLabels) {
    for (Task t : kAllTasks) {
      if (t != task) out.push_back(t);
    }
  }
  return out;
}

bool uses_clinical(IdentifierKind kind) { return kind != IdentifierKind::Naive; }

}  // namespace

std::vector<std::string> feature_names(IdentifierKind kind, Task task) {
  std::vector<std::string> names;
  if (uses_clinical(kind)) {
    for (auto n : kClinicalNames) names.emplace_back(n);
  }
  for (Task t : score_block(kind, task)) names.push_back(fmt::format("score:{}", task_name(t)));
  return names;
}

std::vector<double> build_features(const StudyRecord& study, IdentifierKind kind, std::size_t model, Task task) {
  if (model >= study.scores.size()) {
    throw InputError(fmt::format("study '{}' has no output for model index {}", study.study_id, model));
  }
  std::vector<double> v;
  v.reserve(feature_count(kind));
  if (uses_clinical(kind)) {
    const auto c = study.clinical();
    v.assign(c.begin(), c.end());
  }
  for (Task t : score_block(kind, task)) v.push_back(study.score(model, t));
  return v;
}

FeatureMatrix build_feature_matrix(const Dataset& dataset, std::span<const std::size_t> rows,
                                   IdentifierKind kind, std::size_t model, Task task) {
  FeatureMatrix x;
  x.rows = rows.size();
  x.columns.assign(feature_count(kind), std::vector<double>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto v = build_features(dataset[rows[r]], kind, model, task);
    for (std::size_t j = 0; j < v.size(); ++j) x.columns[j][r] = v[j];
  }
  return x;
}

double LogisticModel::predict_proba(std::span<const double> row) const {
  double eta = coefficients[0];
  for (std::size_t j = 0; j < row.size(); ++j) eta += coefficients[j + 1] * row[j];
  eta = std::clamp(eta, -700.0, 700.0);
  return 1.0 / (1.0 + std::exp(-eta));
}

TrainedIdentifier::TrainedIdentifier(IdentifierKind kind, std::string model_id, std::size_t model, Task task,
                                     metrics::ThresholdResult threshold, Backend backend)
    : kind_(kind),
      model_id_(std::move(model_id)),
      model_(model),
      task_(task),
      threshold_(threshold),
      backend_(std::move(backend)) {}

double TrainedIdentifier::likelihood(const StudyRecord& study) const {
  if (kind_ == IdentifierKind::Naive) return naive_score(study.score(model_, task_), threshold_.threshold);
  const auto row = build_features(study, kind_, model_, task_);
  if (const auto* g = std::get_if<GbdtModel>(&backend_)) return g->predict_proba(row);
  if (const auto* l = std::get_if<LogisticModel>(&backend_)) return l->predict_proba(row);
  throw ComputeError("identifier has no fitted backend");
}

std::vector<double> TrainedIdentifier::likelihoods(const Dataset& dataset, std::span<const std::size_t> rows) const {
  std::vector<double> out(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) out[r] = likelihood(dataset[rows[r]]);
  return out;
}

TrainedIdentifier train_identifier(const Dataset& dataset, std::span<const std::size_t> train_fold,
                                   IdentifierKind kind, std::size_t model, Task task,
                                   const ClassifierBackendSpec& backend, std::uint64_t seed) {
  std::vector<double> scores;
  std::vector<int> labels;
  for (std::size_t i : train_fold) {
    scores.push_back(dataset[i].score(model, task));
    labels.push_back(dataset[i].label(task));
  }
  return train_identifier(dataset, train_fold, kind, model, task, metrics::youden_threshold(scores, labels),
                          backend, seed);
}

TrainedIdentifier train_identifier(const Dataset& dataset, std::span<const std::size_t> train_fold,
                                   IdentifierKind kind, std::size_t model, Task task,
                                   const metrics::ThresholdResult& threshold,
                                   const ClassifierBackendSpec& backend, std::uint64_t seed) {
  if (model >= dataset.num_models()) throw InputError(fmt::format("model index {} out of range", model));
  const std::string& model_id = dataset.model_ids()[model];
  if (kind == IdentifierKind::Naive) return TrainedIdentifier(kind, model_id, model, task, threshold, {});

  std::vector<int> target(train_fold.size());
  std::size_t wrong = 0;
  for (std::size_t r = 0; r < train_fold.size(); ++r) {
    const StudyRecord& s = dataset[train_fold[r]];
    const int pred = s.score(model, task) > threshold.threshold ? 1 : 0;
    target[r] = pred != s.label(task) ? 1 : 0;
    wrong += static_cast<std::size_t>(target[r]);
  }
  if (wrong == 0 || wrong == train_fold.size()) {
    throw DegenerateTargetError(fmt::format(
        "model '{}', {}: training fold has {} misclassified of {} studies", model_id, task_name(task), wrong,
        train_fold.size()));
  }

  FeatureMatrix x = build_feature_matrix(dataset, train_fold, kind, model, task);
  if (backend.kind == ClassifierBackendSpec::Kind::GradientBoostedTrees) {
    return TrainedIdentifier(kind, model_id, model, task, threshold, fit_gbdt(x, target, backend.trees, seed));
  }
  glm::DesignMatrix design;
  design.rows = x.rows;
  const auto names = feature_names(kind, task);
  for (std::size_t j = 0; j < x.cols(); ++j) design.add_column(names[j], x.columns[j]);
  glm::FitConfig cfg;
  cfg.ridge = backend.ridge;
  const glm::FitReport fit = glm::fit_logistic(design, target, cfg);
  LogisticModel lm;
  for (const auto& f : fit.features) lm.coefficients.push_back(f.coefficient);
  return TrainedIdentifier(kind, model_id, model, task, threshold, std::move(lm));
}

const IdentifierSummary* IdentifierEvalReport::find(Task task, IdentifierKind kind) const {
  for (const auto& s : summary) {
    if (s.task == task && s.kind == kind) return &s;
  }
  return nullptr;
}

IdentifierEvalReport evaluate_identifiers(const Dataset& dataset, const ClassifierBackendSpec& backend,
                                          const EvalOptions& options, std::uint64_t seed) {
  if (options.splits.n_splits == 0) throw InputError("evaluate_identifiers: n_splits must be positive");
  const std::size_t n_models = dataset.num_models();
  const std::size_t n_splits = options.splits.n_splits;

  std::vector<TrainTestSplit> splits;
  for (std::size_t s = 0; s < n_splits; ++s) {
    splits.push_back(train_test_split(dataset.size(), options.splits.train_fraction,
                                      derive_seed(seed, "identify-split", {s})));
  }

  struct Job {
    Task task;
    std::size_t model;
    std::size_t split;
  };
  std::vector<Job> jobs;
  for (Task t : options.tasks) {
    for (std::size_t m = 0; m < n_models; ++m) {
      for (std::size_t s = 0; s < n_splits; ++s) jobs.push_back({t, m, s});
    }
  }

  struct JobResult {
    std::vector<IdentifierCell> cells;
    std::vector<std::string> warnings;
  };
  std::vector<JobResult> results(jobs.size());

  parallel_for(jobs.size(), [&](std::size_t j) {
    const Job& job = jobs[j];
    JobResult& out = results[j];
    const auto& split = splits[job.split];
    const std::string& model_id = dataset.model_ids()[job.model];
    const auto tag = [&] {
      return fmt::format("{} / model '{}' / split {}", task_name(job.task), model_id, job.split);
    };

    std::vector<double> train_scores;
    std::vector<int> train_labels;
    for (std::size_t i : split.train) {
      train_scores.push_back(dataset[i].score(job.model, job.task));
      train_labels.push_back(dataset[i].label(job.task));
    }
    metrics::ThresholdResult threshold;
    try {
      threshold = metrics::youden_threshold(train_scores, train_labels);
    } catch (const UndefinedMetricError& e) {
      out.warnings.push_back(fmt::format("{}: skipped, {}", tag(), e.what()));
      return;
    }

    std::vector<int> test_truth;
    for (std::size_t i : split.test) {
      const StudyRecord& s = dataset[i];
      const int pred = s.score(job.model, job.task) > threshold.threshold ? 1 : 0;
      test_truth.push_back(pred != s.label(job.task) ? 1 : 0);
    }
    const auto wrong = static_cast<std::size_t>(std::count(test_truth.begin(), test_truth.end(), 1));
    if (wrong == 0 || wrong == test_truth.size()) {
      out.warnings.push_back(fmt::format("{}: skipped, test fold has {} misclassified of {}", tag(), wrong,
                                         test_truth.size()));
      return;
    }

    for (IdentifierKind kind : options.kinds) {
      const auto k = static_cast<std::uint64_t>(kind);
      const auto t = static_cast<std::uint64_t>(job.task);
      try {
        const TrainedIdentifier id =
            train_identifier(dataset, split.train, kind, job.model, job.task, threshold, backend,
                             derive_seed(seed, "identify-train", {t, job.model, job.split, k}));
        const auto likelihood = id.likelihoods(dataset, split.test);
        IdentifierCell cell;
        cell.task = job.task;
        cell.kind = kind;
        cell.model_id = model_id;
        cell.split = job.split;
        cell.threshold = threshold.threshold;
        cell.auroc = metrics::bootstrap_auroc(likelihood, test_truth, options.n_resamples,
                                              derive_seed(seed, "identify-bootstrap", {t, job.model, job.split, k}));
        out.cells.push_back(std::move(cell));
      } catch (const ComputeError& e) {
        out.warnings.push_back(fmt::format("{} / {}: skipped, {}", tag(), kind_name(kind), e.what()));
      }
    }
  });

  IdentifierEvalReport report;
  for (auto& r : results) {
    for (auto& c : r.cells) report.cells.push_back(std::move(c));
    for (auto& w : r.warnings) report.warnings.push_back(std::move(w));
  }
  std::stable_sort(report.cells.begin(), report.cells.end(), [](const IdentifierCell& a, const IdentifierCell& b) {
    return std::tie(a.task, a.kind, a.model_id, a.split) < std::tie(b.task, b.kind, b.model_id, b.split);
  });

  std::map<std::pair<Task, IdentifierKind>, IdentifierSummary> acc;
  for (const auto& c : report.cells) {
    auto& s = acc[{c.task, c.kind}];
    s.task = c.task;
    s.kind = c.kind;
    s.n_cells += 1;
    s.mean_auroc += c.auroc.point;
    s.ci_lower += c.auroc.lower;
    s.ci_upper += c.auroc.upper;
  }
  for (auto& [key, s] : acc) {
    const auto n = static_cast<double>(s.n_cells);
    s.mean_auroc /= n;
    s.ci_lower /= n;
    s.ci_upper /= n;
    report.summary.push_back(s);
  }
  return report;
}

}  // namespace flipaudit::identify
