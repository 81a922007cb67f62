#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "flipaudit/core/dataset.hpp"
#include "flipaudit/glm/logistic.hpp"
#include "flipaudit/identifiers/gbdt.hpp"
#include "flipaudit/metrics/metrics.hpp"

namespace flipaudit::identify {

// naive: -|score - threshold|, untrained.
// clinical_only: the five clinical covariates.
// same_label: clinical + the task's own score (6 features).
// all_labels: clinical + the task's score followed by the other four task
//   scores in canonical task order (10 features), so same_label is a prefix.
enum class IdentifierKind { Naive, ClinicalOnly, SameLabel, AllLabels };

inline constexpr std::array<IdentifierKind, 4> kAllKinds = {
    IdentifierKind::Naive, IdentifierKind::ClinicalOnly, IdentifierKind::SameLabel,
    IdentifierKind::AllLabels};

std::string_view kind_name(IdentifierKind kind);
std::optional<IdentifierKind> parse_kind(std::string_view name);

std::size_t feature_count(IdentifierKind kind);
std::vector<std::string> feature_names(IdentifierKind kind, Task task);

// Always <= 0; larger means closer to the threshold.
inline double naive_score(double score, double threshold) { return -std::abs(score - threshold); }

std::vector<double> build_features(const StudyRecord& study, IdentifierKind kind, std::size_t model, Task task);
FeatureMatrix build_feature_matrix(const Dataset& dataset, std::span<const std::size_t> rows,
                                   IdentifierKind kind, std::size_t model, Task task);

struct ClassifierBackendSpec {
  enum class Kind { GradientBoostedTrees, Logistic };
  Kind kind = Kind::GradientBoostedTrees;
  GbdtParams trees;
  double ridge = 1e-6;  // logistic backend only
};

struct LogisticModel {
  std::vector<double> coefficients;  // intercept first
  double predict_proba(std::span<const double> row) const;
};

class TrainedIdentifier {
 public:
  using Backend = std::variant<std::monostate, GbdtModel, LogisticModel>;

  TrainedIdentifier(IdentifierKind kind, std::string model_id, std::size_t model, Task task,
                    metrics::ThresholdResult threshold, Backend backend);

  IdentifierKind kind() const { return kind_; }
  const std::string& model_id() const { return model_id_; }
  std::size_t model() const { return model_; }
  Task task() const { return task_; }
  const metrics::ThresholdResult& threshold_used() const { return threshold_; }
  const Backend& backend() const { return backend_; }

  // Misclassification likelihood; in [0, 1] for trained kinds, the naive
  // ranking score for the naive kind.
  double likelihood(const StudyRecord& study) const;
  std::vector<double> likelihoods(const Dataset& dataset, std::span<const std::size_t> rows) const;

 private:
  IdentifierKind kind_;
  std::string model_id_;
  std::size_t model_;
  Task task_;
  metrics::ThresholdResult threshold_;
  Backend backend_;
};

// Fits on the fold's own Youden threshold and misclassification ground truth.
// The naive kind is returned without fitting. Throws DegenerateTargetError if
// the fold has no misclassified or no correctly classified study.
TrainedIdentifier train_identifier(const Dataset& dataset, std::span<const std::size_t> train_fold,
                                   IdentifierKind kind, std::size_t model, Task task,
                                   const ClassifierBackendSpec& backend, std::uint64_t seed);

// Same, with the threshold supplied by the caller.
TrainedIdentifier train_identifier(const Dataset& dataset, std::span<const std::size_t> train_fold,
                                   IdentifierKind kind, std::size_t model, Task task,
                                   const metrics::ThresholdResult& threshold,
                                   const ClassifierBackendSpec& backend, std::uint64_t seed);

struct SplitSpec {
  std::size_t n_splits = 5;
  double train_fraction = 0.72;
};

struct IdentifierCell {
  Task task = Task::Atelectasis;
  IdentifierKind kind = IdentifierKind::Naive;
  std::string model_id;
  std::size_t split = 0;
  double threshold = 0.0;
  metrics::BootstrapCI auroc;
};

struct IdentifierSummary {
  Task task = Task::Atelectasis;
  IdentifierKind kind = IdentifierKind::Naive;
  std::size_t n_cells = 0;
  double mean_auroc = 0.0;
  double ci_lower = 0.0;  // mean of per-cell bootstrap bounds
  double ci_upper = 0.0;
};

struct IdentifierEvalReport {
  std::vector<IdentifierCell> cells;  // sorted by (task, kind, model_id, split)
  std::vector<IdentifierSummary> summary;
  std::vector<std::string> warnings;

  const IdentifierSummary* find(Task task, IdentifierKind kind) const;
};

struct EvalOptions {
  SplitSpec splits;
  std::size_t n_resamples = 1000;
  std::vector<IdentifierKind> kinds{kAllKinds.begin(), kAllKinds.end()};
  std::vector<Task> tasks{kAllTasks.begin(), kAllTasks.end()};
};

// For every task x model x split: Youden threshold on the train fold, ground
// truth on both folds, identifier trained on train, scored on test, AUROC with
// a percentile bootstrap. Degenerate folds are skipped with a warning.
IdentifierEvalReport evaluate_identifiers(const Dataset& dataset, const ClassifierBackendSpec& backend,
                                          const EvalOptions& options, std::uint64_t seed);

}  // namespace flipaudit::identify
