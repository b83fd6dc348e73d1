#pragma once

#include <stdexcept>
#include <string>

namespace evae {

// Invalid hyperparameters, shapes or config files.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// API called out of order or with arguments outside the documented domain.
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// A NaN or Inf was produced somewhere it must not propagate.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Checkpoint restore or trial isolation violated.
class IntegrityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A sprite does not fit the canvas.
class SpecificationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace evae
