#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace flipaudit {

// Study-level random partitions. Fold indices are returned in ascending order.

struct TrainTestSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

struct TrainValTestSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

// round(n * train_fraction) studies go to train.
TrainTestSplit train_test_split(std::size_t n, double train_fraction, std::uint64_t seed);

TrainValTestSplit train_val_test_split(std::size_t n, double train_fraction, double val_fraction,
                                       std::uint64_t seed);

}  // namespace flipaudit
