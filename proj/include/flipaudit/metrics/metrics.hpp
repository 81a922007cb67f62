#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace flipaudit::metrics {

// Probability that a random positive outranks a random negative, ties counted
// one half. Throws UndefinedMetricError unless both classes are present.
double auroc(std::span<const double> scores, std::span<const int> labels);

struct ThresholdResult {
  double threshold = 0.0;  // may be -inf / +inf (the sentinel cut-points)
  double youden_j = 0.0;   // TPR - FPR at threshold
};

// Candidate cut-points are -inf, the midpoints between consecutive distinct
// scores, and +inf. Returns the candidate maximizing J; ties go to the
// smallest threshold.
ThresholdResult youden_threshold(std::span<const double> scores, std::span<const int> labels);

// 1 iff score > threshold.
std::vector<int> binarize(std::span<const double> scores, double threshold);

// |prediction - label| elementwise.
std::vector<int> misclass_ground_truth(std::span<const int> predictions, std::span<const int> labels);

struct Confusion {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
};
Confusion confusion(std::span<const int> predictions, std::span<const int> labels);

struct F1Score {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// TP = FP = FN = 0 gives F1 = 1; TP = 0 with any error gives F1 = 0.
// Precision (recall) with an empty denominator is 1 when there are no false
// negatives (false positives) either, else 0.
F1Score f1_from_counts(std::size_t tp, std::size_t fp, std::size_t fn);
F1Score f1(std::span<const int> predictions, std::span<const int> labels);

struct BootstrapCI {
  double point = 0.0;
  double lower = 0.0;  // 2.5th percentile of the resampled statistic
  double upper = 0.0;  // 97.5th percentile
  std::size_t n_resamples = 0;
  std::uint64_t seed = 0;
};

// A statistic over a multiset of sample indices; nullopt when undefined on
// that resample (for example AUROC with one class).
using Statistic = std::function<std::optional<double>(std::span<const std::size_t>)>;

inline constexpr std::size_t kMaxRedraws = 10;

// Percentile bootstrap. Resample r is drawn from a generator seeded by
// (seed, r, attempt), so results do not depend on evaluation order. A resample
// on which the statistic is undefined is redrawn up to kMaxRedraws times.
BootstrapCI bootstrap_ci(const Statistic& statistic, std::size_t n, std::size_t n_resamples,
                         std::uint64_t seed);

// Linear-interpolation percentile (q in [0, 1]) of an unsorted sample.
double percentile(std::vector<double> values, double q);

// AUROC specialised for repeated evaluation on bootstrap resamples: sorts
// once, then evaluates any index multiset in linear time.
class RankedAuroc {
 public:
  RankedAuroc(std::span<const double> scores, std::span<const int> labels);

  std::optional<double> operator()(std::span<const std::size_t> indices) const;
  std::size_t size() const { return group_of_.size(); }

 private:
  std::vector<std::size_t> group_of_;  // index -> tie group (ascending score)
  std::vector<int> labels_;
  std::size_t n_groups_ = 0;
};

BootstrapCI bootstrap_auroc(std::span<const double> scores, std::span<const int> labels,
                            std::size_t n_resamples, std::uint64_t seed);

}  // namespace flipaudit::metrics
