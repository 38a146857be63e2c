#pragma once

#include <array>
#include <stdexcept>
#include <string>

namespace axisfdr {

/// Invalid argument or input data (bad size, out-of-range parameter,
/// mismatched geometry, malformed file).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// File could not be opened, read or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Base for failures of a numerical procedure on otherwise valid input.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The top eigenvalue of a scatter matrix is not simple, so the mean axis
/// is not identifiable.
class DegenerateMeanError : public NumericalError {
 public:
  DegenerateMeanError(double largest, double second)
      : NumericalError("degenerate mean axis: top eigenvalues " +
                       std::to_string(largest) + " and " +
                       std::to_string(second) + " coincide"),
        eigenvalues_{largest, second} {}

  [[nodiscard]] const std::array<double, 2>& eigenvalues() const noexcept {
    return eigenvalues_;
  }

 private:
  std::array<double, 2> eigenvalues_;
};

/// gamma <= 1/3: the concentration equation has no solution.
class NonConcentratedError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// The intragroup dispersion vanishes and the Watson statistic is undefined.
class DegenerateStatisticError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Empirical-null regression failed (too few bins, non-decaying fit,
/// IRLS divergence).
class FitFailure : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace axisfdr
