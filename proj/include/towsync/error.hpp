#pragma once

#include <stdexcept>
#include <string>

namespace towsync {

// Base for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A configuration or precondition violation. `field()` names the offending
// SimConfig key (or argument) when one applies.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what)
      : Error(field.empty() ? what : field + ": " + what), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

// Non-finite phase or other corrupted numeric state.
class StateError : public Error {
 public:
  using Error::Error;
};

}  // namespace towsync
