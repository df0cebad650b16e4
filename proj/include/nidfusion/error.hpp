#pragma once

#include <stdexcept>
#include <string>

namespace nidfusion {

enum class ErrorKind {
  InvalidInput,
  Parse,
  Format,
  Io,
  DimensionMismatch,
  InvalidEdges,
  UndefinedDistribution,
  EmptyTrajectory,
  NoOverlap,
};

const char* to_string(ErrorKind kind);

/// Exception type thrown by every module. `kind()` lets callers branch on
/// the failure class without parsing the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace nidfusion
