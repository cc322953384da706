#pragma once
// Exception types shared by all modules.
#include <stdexcept>
#include <string>

namespace algdamp {

// Input outside the mathematical domain of an operation (maps to exit code 3).
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

// Malformed or inconsistent configuration (maps to exit code 2).
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct NonGenericCriticalPoint : DomainError {
  using DomainError::DomainError;
};

struct NoTangentPoint : DomainError {
  using DomainError::DomainError;
};

struct NoInfinitySingularity : DomainError {
  using DomainError::DomainError;
};

struct EmptyEnvelope : DomainError {
  using DomainError::DomainError;
};

struct InsufficientData : DomainError {
  using DomainError::DomainError;
};

struct UnstableLimit : DomainError {
  using DomainError::DomainError;
};

}  // namespace algdamp
