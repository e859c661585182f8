#pragma once

#include <stdexcept>
#include <string>

namespace degctrl {

/// Argument outside the documented domain of an operation.
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Invalid experiment configuration (bad keys, inconsistent sizes, ...).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical procedure failed or refused to produce a trustworthy result.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A linear system was too ill-conditioned for the configured cap.
class ConditioningError : public NumericalError {
 public:
  ConditioningError(const std::string& what, double cond, int suggested_size)
      : NumericalError(what), cond_(cond), suggested_size_(suggested_size) {}
  double cond() const { return cond_; }
  /// Largest problem size that passed the cap, or -1 if unknown.
  int suggested_size() const { return suggested_size_; }

 private:
  double cond_;
  int suggested_size_;
};

/// The coupled system fails the algebraic controllability test.
class ControllabilityError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace degctrl
