#pragma once

#include <array>
#include <utility>
#include <vector>

#include "flipaudit/core/types.hpp"

namespace flipaudit {

// Parent/child relations between findings. Ancestor and descendant closures are
// computed once at construction; construction rejects cycles.
class LabelHierarchy {
 public:
  using Edge = std::pair<Finding, Finding>;  // (parent, child)

  LabelHierarchy() : LabelHierarchy(std::vector<Edge>{}) {}
  explicit LabelHierarchy(std::vector<Edge> edges);

  // Lung Opacity over its five children, Consolidation -> Pneumonia,
  // Enlarged Cardiomediastinum -> Cardiomegaly. data/hierarchy.json carries
  // the same edges for the CLI.
  static LabelHierarchy standard();

  const std::vector<Edge>& edges() const { return edges_; }
  const FindingSet& ancestors(Finding f) const { return ancestors_[index_of(f)]; }
  const FindingSet& descendants(Finding f) const { return descendants_[index_of(f)]; }

  // {task} ∪ ancestors(task) ∪ descendants(task)
  FindingSet excluded_features(Task task) const;

 private:
  std::vector<Edge> edges_;
  std::array<FindingSet, kNumFindings> ancestors_{};
  std::array<FindingSet, kNumFindings> descendants_{};
};

}  // namespace flipaudit
