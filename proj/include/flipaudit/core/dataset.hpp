#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "flipaudit/core/hierarchy.hpp"
#include "flipaudit/core/types.hpp"

namespace flipaudit {

// Immutable after construction. Model ids are kept sorted so that every report
// iterates models in the same order.
class Dataset {
 public:
  Dataset(std::vector<StudyRecord> studies, std::vector<std::string> model_ids,
          LabelHierarchy hierarchy);

  const std::vector<StudyRecord>& studies() const { return studies_; }
  const std::vector<std::string>& model_ids() const { return model_ids_; }
  const LabelHierarchy& hierarchy() const { return hierarchy_; }

  std::size_t size() const { return studies_.size(); }
  std::size_t num_models() const { return model_ids_.size(); }
  const StudyRecord& operator[](std::size_t i) const { return studies_[i]; }

  std::optional<std::size_t> model_index(const std::string& model_id) const;

  std::vector<double> scores(std::size_t model, Task task) const;
  std::vector<int> labels(Task task) const;

 private:
  std::vector<StudyRecord> studies_;
  std::vector<std::string> model_ids_;
  LabelHierarchy hierarchy_;
};

// Throws InputError when a record breaks the StudyRecord invariants.
void validate_study(const StudyRecord& study, std::size_t num_models);

Dataset load_dataset(const std::filesystem::path& studies_csv,
                     const std::filesystem::path& outputs_csv,
                     const std::filesystem::path& hierarchy_json);
Dataset load_dataset(const std::filesystem::path& studies_csv,
                     const std::filesystem::path& outputs_csv, LabelHierarchy hierarchy);

LabelHierarchy load_hierarchy(const std::filesystem::path& hierarchy_json);
LabelHierarchy parse_hierarchy(const std::string& json_text);
std::string hierarchy_to_json(const LabelHierarchy& hierarchy);

// (studies.csv, outputs.csv) contents. Scores and ages use 12 significant digits.
std::pair<std::string, std::string> format_dataset(const Dataset& dataset);
void write_dataset(const Dataset& dataset, const std::filesystem::path& studies_csv,
                   const std::filesystem::path& outputs_csv);

}  // namespace flipaudit
