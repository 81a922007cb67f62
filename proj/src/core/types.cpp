#include "flipaudit/core/types.hpp"

namespace flipaudit {

namespace {

constexpr std::array<std::string_view, kNumTasks> kTaskNames = {
    "Atelectasis", "Cardiomegaly", "Pleural Effusion", "Consolidation", "Edema"};

constexpr std::array<std::string_view, kNumFindings> kFindingNames = {
    "No Finding",   "Enlarged Cardiomediastinum", "Cardiomegaly",  "Lung Opacity",
    "Lung Lesion",  "Edema",                      "Consolidation", "Pneumonia",
    "Atelectasis",  "Pneumothorax",               "Pleural Effusion", "Pleural Other",
    "Fracture",     "Support Devices"};

constexpr std::array<Finding, kNumTasks> kTaskFindings = {
    Finding::Atelectasis, Finding::Cardiomegaly, Finding::PleuralEffusion,
    Finding::Consolidation, Finding::Edema};

}  // namespace

std::string_view task_name(Task t) { return kTaskNames[index_of(t)]; }
std::string_view finding_name(Finding f) { return kFindingNames[index_of(f)]; }

std::optional<Task> parse_task(std::string_view name) {
  for (std::size_t i = 0; i < kNumTasks; ++i) {
    if (kTaskNames[i] == name) return static_cast<Task>(i);
  }
  return std::nullopt;
}

std::optional<Finding> parse_finding(std::string_view name) {
  for (std::size_t i = 0; i < kNumFindings; ++i) {
    if (kFindingNames[i] == name) return finding_at(i);
  }
  return std::nullopt;
}

Finding task_finding(Task t) { return kTaskFindings[index_of(t)]; }

std::optional<Task> finding_task(Finding f) {
  for (Task t : kAllTasks) {
    if (task_finding(t) == f) return t;
  }
  return std::nullopt;
}

std::vector<Finding> findings_in(const FindingSet& set) {
  std::vector<Finding> out;
  for (std::size_t i = 0; i < kNumFindings; ++i) {
    if (set.test(i)) out.push_back(finding_at(i));
  }
  return out;
}

}  // namespace flipaudit
