#pragma once

#include <stdexcept>
#include <string>

namespace saltus {

enum class ErrorKind {
  Schema,
  Invariant,
  Domain,
  DomainMismatch,
  UnsupportedProduct,
  UnsupportedSeries,
  BudgetExceeded,
  NotIncreasing,
  Nonexistent,
  InfiniteVariation,
  UnsupportedPair,
  UnsupportedKernel,
  BadExponent,
  EpsTooLarge,
  ConditionViolation,
  SingularPivot,
  StepFailure,
  Io,
};

const char* to_string(ErrorKind kind) noexcept;

/// Base of every error raised by the library. The kind drives CLI exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Schema/invariant errors carry a JSON pointer to the offending node.
class DocumentError : public Error {
 public:
  DocumentError(ErrorKind kind, std::string pointer, const std::string& what)
      : Error(kind, pointer.empty() ? what : what + " at " + pointer),
        pointer_(std::move(pointer)) {}

  const std::string& pointer() const noexcept { return pointer_; }

 private:
  std::string pointer_;
};

/// Raised when an integral fails the existence pre-check.
class NonexistentError : public Error {
 public:
  NonexistentError(std::string reason, std::string location)
      : Error(ErrorKind::Nonexistent,
              reason + " at t = " + location),
        reason_(std::move(reason)),
        location_(std::move(location)) {}

  const std::string& reason() const noexcept { return reason_; }
  const std::string& location() const noexcept { return location_; }

 private:
  std::string reason_;
  std::string location_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

}  // namespace saltus
