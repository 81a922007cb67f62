#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "flipaudit/core/dataset.hpp"
#include "flipaudit/identifiers/identifiers.hpp"
#include "flipaudit/metrics/metrics.hpp"

namespace flipaudit::flip {

// Confusion counts split by partition (K = flipped, R = not flipped), disease
// presence (n = absent, p = present), misclassification truth (first digit)
// and whether the study is predicted misclassified (second digit).
struct FlipSubMatrices {
  std::size_t kn01 = 0, kn11 = 0, kp01 = 0, kp11 = 0;
  std::size_t rn00 = 0, rn10 = 0, rp00 = 0, rp10 = 0;

  std::size_t flipped() const { return kn01 + kn11 + kp01 + kp11; }
  std::size_t total() const { return flipped() + rn00 + rn10 + rp00 + rp10; }
  bool operator==(const FlipSubMatrices&) const = default;
};

// Flipped partition = the k studies with highest likelihood, ties broken by
// ascending index. Throws InputError on length mismatch, k > n, or a
// misclassification vector inconsistent with predictions and labels.
FlipSubMatrices sub_matrices(std::span<const int> predictions, std::span<const int> labels,
                             std::span<const int> misclass_truth, std::span<const double> likelihoods,
                             std::size_t k);

// (Kn11 + Kp11 > Kn01 + Kp01) and (Kp11 >= Kp01)
bool flipping_rule(const FlipSubMatrices& m);

// Negates every prediction whose likelihood is strictly above the threshold.
std::vector<int> apply_flip(std::span<const int> predictions, std::span<const double> likelihoods,
                            double flipping_threshold);

struct F1Change {
  double f1_before = 0.0;
  double f1_after = 0.0;
  double change() const { return f1_after - f1_before; }
};

// Before: TP = Kp01+Rp00, FP = Kn11+Rn10, FN = Kp11+Rp10.
// After:  TP = Kp11+Rp00, FP = Kn01+Rn10, FN = Kp01+Rp10.
F1Change f1_after_from_matrices(const FlipSubMatrices& m);

// k-th highest likelihood (k >= 1); +inf for k = 0.
double top_k_threshold(std::span<const double> likelihoods, std::size_t k);

// {1, ..., ceil(n/10)} ∪ {ceil(n/8), ceil(n/4)}, ascending and de-duplicated.
std::vector<std::size_t> default_k_grid(std::size_t n_train);

// One fold of studies for a fixed (model, task): binarized predictions, labels,
// and the identifier's misclassification likelihoods.
struct FlipFold {
  std::vector<std::string> study_ids;
  std::vector<int> predictions;
  std::vector<int> labels;
  std::vector<double> likelihoods;

  std::vector<int> misclassified() const;
  std::size_t size() const { return predictions.size(); }
};

FlipFold make_fold(const Dataset& dataset, std::span<const std::size_t> rows, std::size_t model, Task task,
                   double threshold, std::vector<double> likelihoods);

struct FlipDecision {
  bool flip = false;
  std::size_t k = 0;
  double flipping_threshold = -1.0;
  double top_k_precision = 0.0;
  double val_improvement = 0.0;
};

struct FlipOutcome {
  FlipDecision decision;
  double f1_before = 0.0;
  double f1_after = 0.0;
  double f1_change = 0.0;
  metrics::BootstrapCI f1_change_ci;
  std::vector<std::string> flipped_study_ids;
};

// For each k: rule on the train fold; if it holds, flip the val fold at the
// train fold's k-th highest likelihood and measure the F1 improvement, else
// the improvement is 0. The k with the largest strictly positive val
// improvement (smallest k on ties) is applied to the test fold, whose F1
// change is bootstrapped; with no such k the test fold is left untouched.
FlipOutcome flip_search(const FlipFold& train, const FlipFold& val, const FlipFold& test,
                        std::span<const std::size_t> k_grid, std::size_t n_resamples, std::uint64_t seed);

struct FlipOptions {
  double train_fraction = 0.6;
  double val_fraction = 0.2;
  std::vector<std::size_t> k_grid;  // empty: default_k_grid(n_train)
  std::size_t n_resamples = 1000;
};

struct FlipRun {
  Task task = Task::Atelectasis;
  identify::IdentifierKind kind = identify::IdentifierKind::SameLabel;
  std::string model_id;
  std::size_t split = 0;
  double disease_threshold = 0.0;
  FlipOutcome outcome;
};

// Split, Youden threshold on train, identifier trained on train, then flip_search.
FlipRun evaluate_flipping(const Dataset& dataset, std::size_t model, Task task, identify::IdentifierKind kind,
                          const identify::ClassifierBackendSpec& backend, const FlipOptions& options,
                          std::size_t split, std::uint64_t seed);

}  // namespace flipaudit::flip
