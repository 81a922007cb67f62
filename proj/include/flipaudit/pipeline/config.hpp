#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "flipaudit/flipping/flipping.hpp"
#include "flipaudit/glm/logistic.hpp"
#include "flipaudit/identifiers/identifiers.hpp"
#include "flipaudit/pipeline/synth.hpp"

namespace flipaudit::pipeline {

struct RunConfig {
  std::uint64_t seed = 20240521;
  std::filesystem::path output_dir = "out";

  // Inputs; unset means the files `synth` writes into output_dir.
  std::optional<std::filesystem::path> studies_csv;
  std::optional<std::filesystem::path> outputs_csv;
  std::optional<std::filesystem::path> hierarchy_json;

  std::optional<std::size_t> threads;
  std::size_t n_resamples = 1000;

  synth::SynthSpec synth = synth::SynthSpec::planted();

  glm::FitConfig glm;
  double audit_threshold_fraction = 0.72;

  identify::ClassifierBackendSpec backend;
  identify::SplitSpec identify_splits;
  std::vector<identify::IdentifierKind> identify_kinds{identify::kAllKinds.begin(), identify::kAllKinds.end()};

  flip::FlipOptions flip;
  std::size_t flip_splits = 1;
  std::vector<identify::IdentifierKind> flip_kinds{identify::IdentifierKind::SameLabel,
                                                   identify::IdentifierKind::AllLabels};

  std::filesystem::path studies_path() const;
  std::filesystem::path outputs_path() const;
  std::filesystem::path hierarchy_path() const;
};

// JSON with // comments allowed. Unknown keys are rejected. Relative paths are
// resolved against base_dir. Throws InputError.
RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir);
RunConfig load_config(const std::filesystem::path& path);

// Every field, so that parse_config(to_json(c)) == c.
std::string config_to_json(const RunConfig& config);

}  // namespace flipaudit::pipeline
