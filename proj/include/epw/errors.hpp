#pragma once

#include <stdexcept>
#include <string>

namespace epw {

// Bad user input: malformed config file, invalid field values.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Valid request we decline to run: non-enumerable oracle query,
// over-cap sample size or horizon.
class RefusalError : public std::runtime_error {
 public:
  explicit RefusalError(const std::string& msg) : std::runtime_error(msg) {}
};

// Two supposedly-equal internal computations disagreed.
class ConsistencyError : public std::runtime_error {
 public:
  explicit ConsistencyError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace epw
