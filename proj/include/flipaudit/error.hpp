#pragma once

#include <stdexcept>
#include <string>

namespace flipaudit {

// Malformed input files, bad configuration, invalid arguments. CLI exit code 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A computation could not produce a defined result. CLI exit code 1.
class ComputeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// AUROC / Youden on a label vector with only one class present.
class UndefinedMetricError : public ComputeError {
 public:
  using ComputeError::ComputeError;
};

// Information matrix not invertible; message names the offending columns.
class SingularDesignError : public ComputeError {
 public:
  using ComputeError::ComputeError;
};

// Training target has a single class (no misclassifications, or no correct ones).
class DegenerateTargetError : public ComputeError {
 public:
  using ComputeError::ComputeError;
};

}  // namespace flipaudit
