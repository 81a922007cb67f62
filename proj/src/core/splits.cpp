#include "flipaudit/core/splits.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "flipaudit/error.hpp"
#include "flipaudit/util/seed.hpp"

namespace flipaudit {

namespace {

std::vector<std::size_t> permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng = make_rng(seed, "split");
  // Fisher-Yates with an explicit draw so the permutation does not depend on
  // the standard library's std::shuffle implementation.
  for (std::size_t i = n; i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(idx[i - 1], idx[pick(rng)]);
  }
  return idx;
}

std::size_t fold_size(std::size_t n, double fraction) {
  return static_cast<std::size_t>(std::llround(static_cast<double>(n) * fraction));
}

}  // namespace

TrainTestSplit train_test_split(std::size_t n, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw InputError(fmt::format("train fraction {} must be in (0, 1)", train_fraction));
  }
  auto idx = permutation(n, seed);
  const std::size_t n_train = fold_size(n, train_fraction);
  TrainTestSplit s;
  s.train.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.test.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

TrainValTestSplit train_val_test_split(std::size_t n, double train_fraction, double val_fraction,
                                       std::uint64_t seed) {
  if (!(train_fraction > 0.0 && val_fraction > 0.0 && train_fraction + val_fraction < 1.0)) {
    throw InputError(fmt::format("fold fractions ({}, {}) must be positive and sum below 1",
                                 train_fraction, val_fraction));
  }
  auto idx = permutation(n, seed);
  const std::size_t n_train = fold_size(n, train_fraction);
  const std::size_t n_val = std::min(n - n_train, fold_size(n, val_fraction));
  auto b = idx.begin();
  TrainValTestSplit s;
  s.train.assign(b, b + static_cast<std::ptrdiff_t>(n_train));
  s.val.assign(b + static_cast<std::ptrdiff_t>(n_train), b + static_cast<std::ptrdiff_t>(n_train + n_val));
  s.test.assign(b + static_cast<std::ptrdiff_t>(n_train + n_val), idx.end());
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.val.begin(), s.val.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

}  // namespace flipaudit
