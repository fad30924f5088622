#pragma once

#include <functional>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace geodecomp {

/// Points of the model spaces. Dimension is a runtime property of the space.
using Point = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Real-valued function on the ambient space.
using ScalarField = std::function<double(const Point&)>;

/// Thrown when an argument lies outside the domain of a mathematical operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A check or builder was applied to an input that violates its precondition
/// (e.g. a linearity check outside the special transport class).
class PreconditionError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A numerical resolution knob is too coarse for the requested estimate.
class ResolutionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A standing assumption on the transport failed at a sampled point.
class AssumptionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Exhaustive enumeration would exceed the configured work cap.
class BudgetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace geodecomp
