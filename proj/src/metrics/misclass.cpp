#include "flipaudit/metrics/misclass.hpp"

namespace flipaudit::metrics {

MisclassMatrix build_misclass_matrix(const Dataset& dataset, std::size_t model, Task task,
                                     std::span<const std::size_t> threshold_fold) {
  const auto scores = dataset.scores(model, task);
  const auto labels = dataset.labels(task);

  std::vector<double> fold_scores;
  std::vector<int> fold_labels;
  fold_scores.reserve(threshold_fold.size());
  fold_labels.reserve(threshold_fold.size());
  for (std::size_t i : threshold_fold) {
    fold_scores.push_back(scores[i]);
    fold_labels.push_back(labels[i]);
  }

  MisclassMatrix m;
  m.model_id = dataset.model_ids()[model];
  m.task = task;
  m.threshold = youden_threshold(fold_scores, fold_labels);
  m.predictions = binarize(scores, m.threshold.threshold);
  m.misclassified = misclass_ground_truth(m.predictions, labels);
  m.labels = labels;
  return m;
}

}  // namespace flipaudit::metrics
