#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "flipaudit/core/dataset.hpp"
#include "flipaudit/core/hierarchy.hpp"
#include "flipaudit/core/types.hpp"

namespace flipaudit::synth {

// Misclassification log-odds for one task, for every model:
//   logit(base_rate) + age_effect*(age - 60) + lateral_effect*(lateral - lateral_rate)
//     + sum_f effect_f * (finding_f - prevalence_f)
struct TaskRecipe {
  double base_rate = 0.15;
  double age_effect = 0.0;
  double lateral_effect = 0.0;
  std::vector<std::pair<Finding, double>> finding_effects;
};

struct SynthSpec {
  std::size_t n_studies = 700;
  std::size_t n_models = 10;
  std::array<TaskRecipe, kNumTasks> tasks{};

  // Misclassified scores sit at a Beta(2, b) fraction of the way from the
  // threshold to the nearer edge, correct ones at a uniform fraction. Larger b
  // pushes errors closer to the threshold (naive AUROC = 1 - 2/(2+b)).
  double distance_concentration = 6.0;
  double dead_zone = 0.01;  // no score within this distance of the threshold
  double threshold_min = 0.35;
  double threshold_max = 0.65;

  double age_mean = 60.0, age_sd = 17.0, age_min = 18.0, age_max = 95.0;
  double male_rate = 0.594;
  double lateral_rate = 0.35;
  // Per-finding draw probability at age 60 (No Finding is derived, its entry unused).
  std::array<double, kNumFindings> prevalence{};
  double finding_age_slope = 0.01;  // log-odds per year, all drawn findings

  // Planted default: age +0.02/yr, lateral view -0.6, Support Devices +0.5 on
  // three tasks, base rate 0.15.
  static SynthSpec planted();
  // Same population, every misclassification effect zero.
  static SynthSpec null_effects();

  void validate() const;  // InputError on invalid rates or sizes
};

struct SynthResult {
  Dataset dataset;
  std::vector<std::array<double, kNumTasks>> thresholds;  // [model][task], planted
  // [model][task][study]; 1 where the planted draw made the prediction wrong.
  std::vector<std::array<std::vector<int>, kNumTasks>> planted_misclass;
};

SynthResult generate(const SynthSpec& spec, const LabelHierarchy& hierarchy, std::uint64_t seed);

// The recipe, thresholds and seed as JSON, for oracle checks downstream.
std::string recipe_json(const SynthSpec& spec, const SynthResult& result, std::uint64_t seed);

// P(planted misclassification | clinical covariates, score) under the
// generator, given the planted threshold of the (model, task). Findings are
// marginalized exactly; throws InputError if that needs more than 16 draws.
double misclass_posterior(const SynthSpec& spec, const LabelHierarchy& hierarchy, const StudyRecord& study,
                          Task task, double threshold, double score);

}  // namespace flipaudit::synth
