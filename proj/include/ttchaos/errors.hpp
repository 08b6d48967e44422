#pragma once

#include <stdexcept>
#include <string>

namespace ttchaos {

// Refusal of an operation whose dense size or cost exceeds a hard guard.
class guard_error : public std::runtime_error {
public:
  explicit guard_error(const std::string& what) : std::runtime_error(what) {}
};

// Invalid or inconsistent user-facing configuration.
class config_error : public std::runtime_error {
public:
  explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

// Iteration failed to reach its tolerance within the allowed budget.
class convergence_error : public std::runtime_error {
public:
  explicit convergence_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace ttchaos
