#pragma once

#include <stdexcept>
#include <string>

namespace vmic {

// Malformed or inconsistent user input (config, CSV, WAV, schedule).
class InputError : public std::runtime_error {
 public:
  explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

// Configuration problem tied to a specific key, e.g. "room.corners".
class ConfigError : public InputError {
 public:
  ConfigError(std::string key, const std::string& message)
      : InputError(key + ": " + message), key_(std::move(key)) {}

  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

// A numeric kernel could not produce a defined result (zero energy, etc).
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace vmic
