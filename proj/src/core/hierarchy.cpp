#include "flipaudit/core/hierarchy.hpp"

#include <fmt/format.h>

#include "flipaudit/error.hpp"

namespace flipaudit {

LabelHierarchy::LabelHierarchy(std::vector<Edge> edges) : edges_(std::move(edges)) {
  std::array<FindingSet, kNumFindings> children{};
  for (const auto& [parent, child] : edges_) {
    if (parent == child) {
      throw InputError(fmt::format("hierarchy edge '{}' -> '{}' is a self loop",
                                   finding_name(parent), finding_name(child)));
    }
    children[index_of(parent)].set(index_of(child));
  }

  // Transitive closure by repeated relaxation; 14 nodes so this is trivially cheap.
  descendants_ = children;
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i < kNumFindings; ++i) {
      FindingSet next = descendants_[i];
      for (std::size_t j = 0; j < kNumFindings; ++j) {
        if (descendants_[i].test(j)) next |= descendants_[j];
      }
      if (next != descendants_[i]) {
        descendants_[i] = next;
        changed = true;
      }
    }
  }

  for (std::size_t i = 0; i < kNumFindings; ++i) {
    if (descendants_[i].test(i)) {
      throw InputError(fmt::format("hierarchy contains a cycle through '{}'",
                                   finding_name(finding_at(i))));
    }
    for (std::size_t j = 0; j < kNumFindings; ++j) {
      if (descendants_[i].test(j)) ancestors_[j].set(i);
    }
  }
}

LabelHierarchy LabelHierarchy::standard() {
  return LabelHierarchy({
      {Finding::LungOpacity, Finding::LungLesion},
      {Finding::LungOpacity, Finding::Edema},
      {Finding::LungOpacity, Finding::Consolidation},
      {Finding::LungOpacity, Finding::Pneumonia},
      {Finding::LungOpacity, Finding::Atelectasis},
      {Finding::Consolidation, Finding::Pneumonia},
      {Finding::EnlargedCardiomediastinum, Finding::Cardiomegaly},
  });
}

FindingSet LabelHierarchy::excluded_features(Task task) const {
  Finding f = task_finding(task);
  FindingSet out = ancestors(f) | descendants(f);
  out.set(index_of(f));
  return out;
}

}  // namespace flipaudit
