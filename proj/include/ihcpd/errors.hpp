#pragma once

#include <stdexcept>
#include <string>

namespace ihcpd {

// Broken precondition on the caller's side (length mismatch, out-of-range id, ...).
class ContractViolation : public std::logic_error {
public:
  explicit ContractViolation(const std::string &what) : std::logic_error(what) {}
};

// The trellis lost all of its mass; the observation is numerically impossible under the model.
class DegenerateState : public std::runtime_error {
public:
  explicit DegenerateState(const std::string &what) : std::runtime_error(what) {}
};

class InputError : public std::runtime_error {
public:
  explicit InputError(const std::string &what) : std::runtime_error(what) {}
};

class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(const std::string &what) : std::runtime_error(what) {}
};

inline void require(bool condition, const char *message) {
  if (!condition) throw ContractViolation(message);
}

} // namespace ihcpd
