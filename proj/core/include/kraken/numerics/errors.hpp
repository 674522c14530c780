#pragma once

#include <stdexcept>
#include <string>

namespace kraken {

// Shape or dimension disagreement between operands.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A NaN or infinity escaped an operation, or an input violates a numeric
// contract (e.g. a fully masked softmax row).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid model / run configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// KV cache or context capacity exceeded.
class CapacityError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// Malformed on-disk data (checkpoints, config files).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace kraken
