#pragma once

#include <stdexcept>
#include <string>

namespace nvmag {

/// Raised when a numerical procedure cannot deliver its contract
/// (non-convergent fit, failed root bracket, non-integrable spectrum).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// Raised for invalid run configuration; carries the offending key.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& what)
      : std::runtime_error(what), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

}  // namespace nvmag
