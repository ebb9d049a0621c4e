#pragma once

#include <stdexcept>
#include <string>

namespace fairpca {

// Every failure the library raises carries one of these kinds so callers
// (tests, the CLI exit-code mapping) can dispatch without parsing messages.
enum class ErrorKind {
  RankDeficient,
  DimensionMismatch,
  NotSymmetric,
  NotFinite,
  NoConvergence,
  Io,
  MalformedRow,
  InvalidSpec,
  SchemaViolation,
  InsufficientData,
  DegenerateGap,
  GroupStarvation,
  RankCollapse,
  EmptyGroup,
  DimensionBudget,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void raise(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace fairpca
