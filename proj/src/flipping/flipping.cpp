#include "flipaudit/flipping/flipping.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "flipaudit/core/splits.hpp"
#include "flipaudit/error.hpp"
#include "flipaudit/util/seed.hpp"

namespace flipaudit::flip {

namespace {

// Indices by descending likelihood, ties by ascending index.
std::vector<std::size_t> rank_by_likelihood(std::span<const double> likelihoods) {
  std::vector<std::size_t> order(likelihoods.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return likelihoods[a] > likelihoods[b]; });
  return order;
}

}  // namespace

FlipSubMatrices sub_matrices(std::span<const int> predictions, std::span<const int> labels,
                             std::span<const int> misclass_truth, std::span<const double> likelihoods,
                             std::size_t k) {
  const std::size_t n = predictions.size();
  if (labels.size() != n || misclass_truth.size() != n || likelihoods.size() != n) {
    throw InputError("sub_matrices: length mismatch");
  }
  if (k > n) throw InputError(fmt::format("sub_matrices: k = {} exceeds {} studies", k, n));

  std::vector<char> flipped(n, 0);
  const auto order = rank_by_likelihood(likelihoods);
  for (std::size_t r = 0; r < k; ++r) flipped[order[r]] = 1;

  FlipSubMatrices m;
  for (std::size_t i = 0; i < n; ++i) {
    if (misclass_truth[i] != (predictions[i] != labels[i] ? 1 : 0)) {
      throw InputError(fmt::format("sub_matrices: misclassification truth disagrees with prediction at {}", i));
    }
    const bool disease = labels[i] == 1;
    const bool wrong = misclass_truth[i] == 1;
    if (flipped[i]) {
      (disease ? (wrong ? m.kp11 : m.kp01) : (wrong ? m.kn11 : m.kn01)) += 1;
    } else {
      (disease ? (wrong ? m.rp10 : m.rp00) : (wrong ? m.rn10 : m.rn00)) += 1;
    }
  }
  return m;
}

bool flipping_rule(const FlipSubMatrices& m) {
  return m.kn11 + m.kp11 > m.kn01 + m.kp01 && m.kp11 >= m.kp01;
}

std::vector<int> apply_flip(std::span<const int> predictions, std::span<const double> likelihoods,
                            double flipping_threshold) {
  if (predictions.size() != likelihoods.size()) throw InputError("apply_flip: length mismatch");
  std::vector<int> out(predictions.begin(), predictions.end());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (likelihoods[i] > flipping_threshold) out[i] = 1 - out[i];
  }
  return out;
}

F1Change f1_after_from_matrices(const FlipSubMatrices& m) {
  return F1Change{metrics::f1_from_counts(m.kp01 + m.rp00, m.kn11 + m.rn10, m.kp11 + m.rp10).f1,
                  metrics::f1_from_counts(m.kp11 + m.rp00, m.kn01 + m.rn10, m.kp01 + m.rp10).f1};
}

double top_k_threshold(std::span<const double> likelihoods, std::size_t k) {
  if (k == 0) return std::numeric_limits<double>::infinity();
  if (k > likelihoods.size()) throw InputError("top_k_threshold: k exceeds fold size");
  std::vector<double> v(likelihoods.begin(), likelihoods.end());
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k - 1), v.end(), std::greater<>());
  return v[k - 1];
}

std::vector<std::size_t> default_k_grid(std::size_t n_train) {
  auto ceil_div = [](std::size_t a, std::size_t b) { return (a + b - 1) / b; };
  std::vector<std::size_t> grid;
  for (std::size_t k = 1; k <= ceil_div(n_train, 10); ++k) grid.push_back(k);
  grid.push_back(ceil_div(n_train, 8));
  grid.push_back(ceil_div(n_train, 4));
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  grid.erase(std::remove_if(grid.begin(), grid.end(), [&](std::size_t k) { return k == 0 || k > n_train; }),
             grid.end());
  return grid;
}

std::vector<int> FlipFold::misclassified() const { return metrics::misclass_ground_truth(predictions, labels); }

FlipFold make_fold(const Dataset& dataset, std::span<const std::size_t> rows, std::size_t model, Task task,
                   double threshold, std::vector<double> likelihoods) {
  if (likelihoods.size() != rows.size()) throw InputError("make_fold: likelihood count mismatch");
  FlipFold fold;
  fold.likelihoods = std::move(likelihoods);
  for (std::size_t i : rows) {
    const StudyRecord& s = dataset[i];
    fold.study_ids.push_back(s.study_id);
    fold.predictions.push_back(s.score(model, task) > threshold ? 1 : 0);
    fold.labels.push_back(s.label(task));
  }
  return fold;
}

FlipOutcome flip_search(const FlipFold& train, const FlipFold& val, const FlipFold& test,
                        std::span<const std::size_t> k_grid, std::size_t n_resamples, std::uint64_t seed) {
  if (k_grid.empty()) throw InputError("flip_search: empty k grid");
  for (const FlipFold* f : {&train, &val, &test}) {
    if (f->labels.size() != f->size() || f->likelihoods.size() != f->size()) {
      throw InputError("flip_search: fold vectors have different lengths");
    }
  }
  std::vector<std::size_t> ks(k_grid.begin(), k_grid.end());
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());

  const auto train_truth = train.misclassified();
  const double val_f1 = metrics::f1(val.predictions, val.labels).f1;

  FlipDecision best;
  for (std::size_t k_raw : ks) {
    const std::size_t k = std::min(k_raw, train.size());
    const FlipSubMatrices m = sub_matrices(train.predictions, train.labels, train_truth, train.likelihoods, k);
    const bool flip = flipping_rule(m);
    const double threshold = top_k_threshold(train.likelihoods, k);
    double improvement = 0.0;
    if (flip) {
      improvement = metrics::f1(apply_flip(val.predictions, val.likelihoods, threshold), val.labels).f1 - val_f1;
    }
    if (improvement > best.val_improvement) {
      best.val_improvement = improvement;
      best.flipping_threshold = threshold;
      best.flip = flip;
      best.k = k;
      best.top_k_precision = k ? static_cast<double>(m.kn11 + m.kp11) / static_cast<double>(k) : 0.0;
    }
  }

  FlipOutcome out;
  out.decision = best;
  const double test_f1 = metrics::f1(test.predictions, test.labels).f1;
  out.f1_before = test_f1;
  if (!best.flip) {
    out.f1_after = test_f1;
    out.f1_change = 0.0;
    out.f1_change_ci = metrics::BootstrapCI{0.0, 0.0, 0.0, 0, seed};
    return out;
  }

  const auto flipped = apply_flip(test.predictions, test.likelihoods, best.flipping_threshold);
  out.f1_after = metrics::f1(flipped, test.labels).f1;
  out.f1_change = out.f1_after - out.f1_before;
  for (std::size_t i = 0; i < test.size(); ++i) {
    if (flipped[i] != test.predictions[i]) out.flipped_study_ids.push_back(test.study_ids.at(i));
  }
  if (test.size() == 0) {
    out.f1_change_ci = metrics::BootstrapCI{0.0, 0.0, 0.0, 0, seed};
    return out;
  }
  auto delta = [&](std::span<const std::size_t> idx) -> std::optional<double> {
    metrics::Confusion before, after;
    for (std::size_t i : idx) {
      const int y = test.labels[i];
      auto tally = [y](metrics::Confusion& c, int pred) {
        if (pred) {
          (y ? c.tp : c.fp) += 1;
        } else {
          (y ? c.fn : c.tn) += 1;
        }
      };
      tally(before, test.predictions[i]);
      tally(after, flipped[i]);
    }
    return metrics::f1_from_counts(after.tp, after.fp, after.fn).f1 -
           metrics::f1_from_counts(before.tp, before.fp, before.fn).f1;
  };
  out.f1_change_ci = metrics::bootstrap_ci(delta, test.size(), n_resamples, seed);
  return out;
}

FlipRun evaluate_flipping(const Dataset& dataset, std::size_t model, Task task, identify::IdentifierKind kind,
                          const identify::ClassifierBackendSpec& backend, const FlipOptions& options,
                          std::size_t split_index, std::uint64_t seed) {
  const auto t = static_cast<std::uint64_t>(task);
  const auto k = static_cast<std::uint64_t>(kind);
  const TrainValTestSplit split = train_val_test_split(dataset.size(), options.train_fraction, options.val_fraction,
                                                       derive_seed(seed, "flip-split", {split_index}));

  std::vector<double> scores;
  std::vector<int> labels;
  for (std::size_t i : split.train) {
    scores.push_back(dataset[i].score(model, task));
    labels.push_back(dataset[i].label(task));
  }
  const metrics::ThresholdResult threshold = metrics::youden_threshold(scores, labels);
  const identify::TrainedIdentifier identifier = identify::train_identifier(
      dataset, split.train, kind, model, task, threshold, backend,
      derive_seed(seed, "flip-train", {t, model, split_index, k}));

  auto fold = [&](const std::vector<std::size_t>& rows) {
    return make_fold(dataset, rows, model, task, threshold.threshold, identifier.likelihoods(dataset, rows));
  };
  const FlipFold train = fold(split.train);
  const FlipFold val = fold(split.val);
  const FlipFold test = fold(split.test);
  const auto grid = options.k_grid.empty() ? default_k_grid(train.size()) : options.k_grid;

  FlipRun run;
  run.task = task;
  run.kind = kind;
  run.model_id = dataset.model_ids()[model];
  run.split = split_index;
  run.disease_threshold = threshold.threshold;
  run.outcome = flip_search(train, val, test, grid, options.n_resamples,
                            derive_seed(seed, "flip-bootstrap", {t, model, split_index, k}));
  return run;
}

}  // namespace flipaudit::flip
