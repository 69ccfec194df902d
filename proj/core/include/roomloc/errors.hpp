#pragma once

#include <stdexcept>
#include <string>

namespace roomloc {

/// Bad user input: malformed layout, out-of-range config value, missing file.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A loss or gradient became non-finite during optimisation.
class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A model checkpoint and a data set disagree on dimensions.
class ModelMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Two decoded sequences cannot be paired window-for-window.
class AlignmentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace roomloc
