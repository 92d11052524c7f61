#include "saltus/errors.hpp"

namespace saltus {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Schema: return "SchemaError";
    case ErrorKind::Invariant: return "InvariantError";
    case ErrorKind::Domain: return "DomainError";
    case ErrorKind::DomainMismatch: return "DomainMismatch";
    case ErrorKind::UnsupportedProduct: return "UnsupportedProduct";
    case ErrorKind::UnsupportedSeries: return "UnsupportedSeries";
    case ErrorKind::BudgetExceeded: return "BudgetExceeded";
    case ErrorKind::NotIncreasing: return "NotIncreasing";
    case ErrorKind::Nonexistent: return "Nonexistent";
    case ErrorKind::InfiniteVariation: return "InfiniteVariation";
    case ErrorKind::UnsupportedPair: return "UnsupportedPair";
    case ErrorKind::UnsupportedKernel: return "UnsupportedKernel";
    case ErrorKind::BadExponent: return "BadExponent";
    case ErrorKind::EpsTooLarge: return "EpsTooLarge";
    case ErrorKind::ConditionViolation: return "ConditionViolation";
    case ErrorKind::SingularPivot: return "SingularPivot";
    case ErrorKind::StepFailure: return "StepFailure";
    case ErrorKind::Io: return "IoError";
  }
  return "Error";
}

}  // namespace saltus
