#pragma once

#include <stdexcept>
#include <string>

namespace nlgf {

// Malformed input files, schema violations, impossible data preconditions.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite loss or another numerical failure during training.
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller violated an argument contract (bad hyperparameter, dimension mismatch).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace nlgf
