#pragma once

#include <stdexcept>
#include <string>

namespace vdyn {

// Malformed or out-of-range configuration input.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Non-finite values or a numerical procedure that could not complete.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// Fitting procedures that received insufficient or degenerate data.
class FitError : public std::runtime_error {
 public:
  explicit FitError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace vdyn
