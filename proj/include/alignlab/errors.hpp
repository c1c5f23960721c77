#pragma once

#include <stdexcept>
#include <string>

namespace alignlab {

/// Argument outside the mathematical domain of an operation (r <= 0, kappa = 0, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Malformed or inconsistent arguments (grid size mismatch, unsorted grid).
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical procedure failed to reach its tolerance.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, double achieved)
      : std::runtime_error(what), achieved_(achieved) {}

  /// Best relative accuracy reached before giving up.
  double achieved() const noexcept { return achieved_; }

 private:
  double achieved_;
};

}  // namespace alignlab
