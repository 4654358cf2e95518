#pragma once

#include <stdexcept>
#include <string>

namespace ealm {

// Caller violated an operation's precondition (bad index, shape mismatch, ...).
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Unreadable input, malformed file, or rejected configuration value.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ealm
