#include "flipaudit/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "flipaudit/error.hpp"
#include "flipaudit/util/parallel.hpp"
#include "flipaudit/util/seed.hpp"

namespace flipaudit::metrics {

namespace {

void check_lengths(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw InputError(fmt::format("{}: length mismatch ({} vs {})", what, a, b));
}

void check_binary(std::span<const int> v, const char* what) {
  for (int x : v) {
    if (x != 0 && x != 1) throw InputError(fmt::format("{}: values must be 0 or 1", what));
  }
}

// Stable order of indices by ascending score.
std::vector<std::size_t> ascending_order(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  return order;
}

}  // namespace

double auroc(std::span<const double> scores, std::span<const int> labels) {
  check_lengths(scores.size(), labels.size(), "auroc");
  check_binary(labels, "auroc labels");
  const auto order = ascending_order(scores);

  // Walk tie groups in ascending order; each positive beats every negative in
  // earlier groups and ties with negatives in its own group.
  std::int64_t neg_below = 0;
  std::int64_t twice_concordant = 0;
  std::int64_t n_pos = 0, n_neg = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    std::int64_t gp = 0, gn = 0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      (labels[order[j]] ? gp : gn) += 1;
      ++j;
    }
    twice_concordant += 2 * gp * neg_below + gp * gn;
    neg_below += gn;
    n_pos += gp;
    n_neg += gn;
    i = j;
  }
  if (n_pos == 0 || n_neg == 0) {
    throw UndefinedMetricError("AUROC is undefined when only one class is present");
  }
  return static_cast<double>(twice_concordant) / (2.0 * static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

ThresholdResult youden_threshold(std::span<const double> scores, std::span<const int> labels) {
  check_lengths(scores.size(), labels.size(), "youden_threshold");
  check_binary(labels, "youden_threshold labels");
  const auto order = ascending_order(scores);

  std::int64_t P = 0, N = 0;
  for (int y : labels) (y ? P : N) += 1;
  if (P == 0 || N == 0) {
    throw UndefinedMetricError("Youden threshold is undefined when only one class is present");
  }

  // Candidate 0 is -inf: everything predicted positive.
  std::int64_t tp = P, fp = N;
  std::int64_t best_num = tp * N - fp * P;
  double best_threshold = -std::numeric_limits<double>::infinity();
  std::int64_t best_tp = tp, best_fp = fp;

  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    const double v = scores[order[i]];
    while (j < order.size() && scores[order[j]] == v) {
      (labels[order[j]] ? tp : fp) -= 1;
      ++j;
    }
    // Cut-point just above v.
    double cut;
    if (j == order.size()) {
      cut = std::numeric_limits<double>::infinity();
    } else {
      const double next = scores[order[j]];
      cut = v + (next - v) / 2.0;
      if (!(cut < next)) cut = v;
    }
    const std::int64_t num = tp * N - fp * P;
    if (num > best_num) {
      best_num = num;
      best_threshold = cut;
      best_tp = tp;
      best_fp = fp;
    }
    i = j;
  }
  return ThresholdResult{best_threshold, static_cast<double>(best_tp) / static_cast<double>(P) -
                                             static_cast<double>(best_fp) / static_cast<double>(N)};
}

std::vector<int> binarize(std::span<const double> scores, double threshold) {
  std::vector<int> out(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) out[i] = scores[i] > threshold ? 1 : 0;
  return out;
}

std::vector<int> misclass_ground_truth(std::span<const int> predictions, std::span<const int> labels) {
  check_lengths(predictions.size(), labels.size(), "misclass_ground_truth");
  std::vector<int> out(predictions.size());
  for (std::size_t i = 0; i < predictions.size(); ++i) out[i] = predictions[i] != labels[i] ? 1 : 0;
  return out;
}

Confusion confusion(std::span<const int> predictions, std::span<const int> labels) {
  check_lengths(predictions.size(), labels.size(), "confusion");
  Confusion c;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (predictions[i]) {
      (labels[i] ? c.tp : c.fp) += 1;
    } else {
      (labels[i] ? c.fn : c.tn) += 1;
    }
  }
  return c;
}

F1Score f1_from_counts(std::size_t tp, std::size_t fp, std::size_t fn) {
  F1Score s;
  const double TP = static_cast<double>(tp);
  s.precision = tp + fp > 0 ? TP / static_cast<double>(tp + fp) : (fn == 0 ? 1.0 : 0.0);
  s.recall = tp + fn > 0 ? TP / static_cast<double>(tp + fn) : (fp == 0 ? 1.0 : 0.0);
  const std::size_t denom = 2 * tp + fp + fn;
  s.f1 = denom > 0 ? 2.0 * TP / static_cast<double>(denom) : 1.0;
  return s;
}

F1Score f1(std::span<const int> predictions, std::span<const int> labels) {
  const Confusion c = confusion(predictions, labels);
  return f1_from_counts(c.tp, c.fp, c.fn);
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw InputError("percentile of an empty sample");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

BootstrapCI bootstrap_ci(const Statistic& statistic, std::size_t n, std::size_t n_resamples,
                         std::uint64_t seed) {
  if (n == 0) throw InputError("bootstrap_ci: empty sample");
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);
  const auto point = statistic(all);
  if (!point) throw ComputeError("bootstrap_ci: statistic undefined on the full sample");

  BootstrapCI ci;
  ci.point = *point;
  ci.n_resamples = n_resamples;
  ci.seed = seed;
  if (n_resamples == 0) {
    ci.lower = ci.upper = ci.point;
    return ci;
  }

  std::vector<double> draws(n_resamples);
  parallel_for(n_resamples, [&](std::size_t r) {
    std::vector<std::size_t> idx(n);
    for (std::size_t attempt = 0; attempt <= kMaxRedraws; ++attempt) {
      Rng rng = make_rng(seed, "bootstrap", {r, attempt});
      std::uniform_int_distribution<std::size_t> pick(0, n - 1);
      for (auto& i : idx) i = pick(rng);
      if (auto v = statistic(idx)) {
        draws[r] = *v;
        return;
      }
    }
    throw ComputeError(fmt::format(
        "bootstrap_ci: statistic undefined on resample {} after {} redraws", r, kMaxRedraws));
  });
  ci.lower = percentile(draws, 0.025);
  ci.upper = percentile(std::move(draws), 0.975);
  return ci;
}

RankedAuroc::RankedAuroc(std::span<const double> scores, std::span<const int> labels)
    : group_of_(scores.size()), labels_(labels.begin(), labels.end()) {
  check_lengths(scores.size(), labels.size(), "RankedAuroc");
  check_binary(labels, "RankedAuroc labels");
  const auto order = ascending_order(scores);
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      group_of_[order[j]] = n_groups_;
      ++j;
    }
    ++n_groups_;
    i = j;
  }
}

std::optional<double> RankedAuroc::operator()(std::span<const std::size_t> indices) const {
  std::vector<std::int64_t> pos(n_groups_, 0), neg(n_groups_, 0);
  for (std::size_t i : indices) (labels_[i] ? pos : neg)[group_of_[i]] += 1;
  std::int64_t neg_below = 0, twice = 0, n_pos = 0, n_neg = 0;
  for (std::size_t g = 0; g < n_groups_; ++g) {
    twice += 2 * pos[g] * neg_below + pos[g] * neg[g];
    neg_below += neg[g];
    n_pos += pos[g];
    n_neg += neg[g];
  }
  if (n_pos == 0 || n_neg == 0) return std::nullopt;
  return static_cast<double>(twice) / (2.0 * static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

BootstrapCI bootstrap_auroc(std::span<const double> scores, std::span<const int> labels,
                            std::size_t n_resamples, std::uint64_t seed) {
  RankedAuroc stat(scores, labels);
  return bootstrap_ci([&](std::span<const std::size_t> idx) { return stat(idx); }, scores.size(),
                      n_resamples, seed);
}

}  // namespace flipaudit::metrics
