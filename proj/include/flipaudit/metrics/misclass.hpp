#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "flipaudit/core/dataset.hpp"
#include "flipaudit/metrics/metrics.hpp"

namespace flipaudit::metrics {

// Per (model, task): the Youden threshold and, for every study in the
// dataset, the binarized prediction and whether it disagrees with the label.
struct MisclassMatrix {
  std::string model_id;
  Task task = Task::Atelectasis;
  ThresholdResult threshold;
  std::vector<int> predictions;
  std::vector<int> labels;
  std::vector<int> misclassified;
};

// Threshold fitted on the studies in threshold_fold only, then applied to all studies.
MisclassMatrix build_misclass_matrix(const Dataset& dataset, std::size_t model, Task task,
                                     std::span<const std::size_t> threshold_fold);

}  // namespace flipaudit::metrics
