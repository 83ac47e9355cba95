#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace occrisk {

/// Raised when a caller breaks an operation's precondition (shape mismatch,
/// empty structuring element, non-finite query, ...).
class ContractViolation : public std::invalid_argument {
 public:
  explicit ContractViolation(const std::string& what) : std::invalid_argument(what) {}
};

/// Malformed geometry: too few vertices, self-intersecting rings, holes
/// outside their outer ring.
class StructuralError : public std::invalid_argument {
 public:
  explicit StructuralError(const std::string& what) : std::invalid_argument(what) {}
};

/// The sensor origin sits strictly inside an occluder.
class DegenerateObserver : public std::domain_error {
 public:
  explicit DegenerateObserver(const std::string& what) : std::domain_error(what) {}
};

/// Scenario / config parse failure. `path` names the offending field.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string path, const std::string& what)
      : std::runtime_error(path.empty() ? what : path + ": " + what), path_(std::move(path)) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace occrisk
