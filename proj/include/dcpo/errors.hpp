#pragma once

#include <stdexcept>
#include <string>

namespace dcpo {

// Categories double as process exit codes for the CLI.
enum class ErrorKind { Config = 1, Numeric = 2, Infeasible = 3 };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string module, const std::string& message)
      : std::runtime_error(module + ": " + message), kind_(kind), module_(std::move(module)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& module() const noexcept { return module_; }

 private:
  ErrorKind kind_;
  std::string module_;
};

class ConfigError : public Error {
 public:
  ConfigError(std::string module, const std::string& message)
      : Error(ErrorKind::Config, std::move(module), message) {}
};

class NumericError : public Error {
 public:
  NumericError(std::string module, const std::string& message)
      : Error(ErrorKind::Numeric, std::move(module), message) {}
};

class InfeasibleError : public Error {
 public:
  InfeasibleError(std::string module, const std::string& message)
      : Error(ErrorKind::Infeasible, std::move(module), message) {}
};

}  // namespace dcpo
