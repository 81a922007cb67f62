#pragma once

#include <array>
#include <bitset>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace flipaudit {

// The five findings the audited models emit scores for.
enum class Task : std::uint8_t {
  Atelectasis,
  Cardiomegaly,
  PleuralEffusion,
  Consolidation,
  Edema,
};

inline constexpr std::size_t kNumTasks = 5;
inline constexpr std::array<Task, kNumTasks> kAllTasks = {
    Task::Atelectasis, Task::Cardiomegaly, Task::PleuralEffusion,
    Task::Consolidation, Task::Edema};

// The 14 radiologist-annotated findings, in canonical column order.
enum class Finding : std::uint8_t {
  NoFinding,
  EnlargedCardiomediastinum,
  Cardiomegaly,
  LungOpacity,
  LungLesion,
  Edema,
  Consolidation,
  Pneumonia,
  Atelectasis,
  Pneumothorax,
  PleuralEffusion,
  PleuralOther,
  Fracture,
  SupportDevices,
};

inline constexpr std::size_t kNumFindings = 14;

using FindingSet = std::bitset<kNumFindings>;

std::string_view task_name(Task t);
std::string_view finding_name(Finding f);
std::optional<Task> parse_task(std::string_view name);
std::optional<Finding> parse_finding(std::string_view name);

Finding task_finding(Task t);
std::optional<Task> finding_task(Finding f);

constexpr std::size_t index_of(Task t) { return static_cast<std::size_t>(t); }
constexpr std::size_t index_of(Finding f) { return static_cast<std::size_t>(f); }
constexpr Finding finding_at(std::size_t i) { return static_cast<Finding>(i); }

std::vector<Finding> findings_in(const FindingSet& set);

// Number of clinical covariates carried per study.
inline constexpr std::size_t kNumClinical = 5;
inline constexpr std::array<std::string_view, kNumClinical> kClinicalNames = {
    "age", "sex", "has_lateral_view", "num_ap_views", "num_pa_views"};

struct StudyRecord {
  std::string study_id;
  double age = 0.0;
  int sex = 0;  // 0 = female, 1 = male
  bool has_lateral_view = false;
  int num_ap_views = 0;
  int num_pa_views = 0;
  std::array<std::uint8_t, kNumFindings> labels{};
  // scores[m][t]: output of model m (index into Dataset::model_ids) for task t.
  std::vector<std::array<double, kNumTasks>> scores;

  std::uint8_t label(Finding f) const { return labels[index_of(f)]; }
  std::uint8_t label(Task t) const { return label(task_finding(t)); }
  double score(std::size_t model, Task t) const { return scores[model][index_of(t)]; }

  std::array<double, kNumClinical> clinical() const {
    return {age, static_cast<double>(sex), has_lateral_view ? 1.0 : 0.0,
            static_cast<double>(num_ap_views), static_cast<double>(num_pa_views)};
  }
};

}  // namespace flipaudit
