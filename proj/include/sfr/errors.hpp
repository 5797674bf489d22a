#pragma once

#include <stdexcept>
#include <string>

namespace sfr {

/// Argument outside the mathematical domain of an operation (x <= 0 for Y, k <= 0, NaN input).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Green's function or image-source evaluated at (numerically) coincident points.
class CoincidentPointsError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// Evaluation point too close to the integration boundary for midpoint quadrature.
class NearBoundaryError : public DomainError {
 public:
  using DomainError::DomainError;
};

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Training produced a non-finite loss.
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Configuration could not be parsed or failed validation. `field()` names the offending key.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::runtime_error(what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace sfr
