#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace returnctrl {

// Exit-code categories used by the CLI: 2 config, 3 construction, 4 convergence.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct GeometryError : ConfigError {
  explicit GeometryError(const std::string& msg) : ConfigError(msg) {}
};

struct ConstructionError : std::runtime_error {
  explicit ConstructionError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ConvergenceError : std::runtime_error {
  ConvergenceError(const std::string& msg, std::vector<double> history = {})
      : std::runtime_error(msg), residual_history(std::move(history)) {}
  std::vector<double> residual_history;
};

}  // namespace returnctrl
