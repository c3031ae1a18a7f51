#pragma once

#include <stdexcept>
#include <string>

namespace assocmem {

/// Bad or unknown configuration value. The CLI maps it to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File could not be read or written. The CLI maps it to exit code 3.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A loss, score or gradient stopped being finite. `step` is the optimizer
/// step at which it happened (-1 outside training). The CLI maps it to exit 4.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what, long step = -1)
      : std::runtime_error(what), step_(step) {}
  long step() const { return step_; }

 private:
  long step_;
};

}  // namespace assocmem
