// Exception types shared across the library.

#pragma once

#include <stdexcept>
#include <string>

namespace rodstatics {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The rotation angle is within 1e-6 rad of pi, where the logarithm branch
/// is ill-conditioned and the principal value is not unique.
class RotationNearPi final : public Error {
 public:
  using Error::Error;
};

/// An element's relative rotation reached the pi/2 trust bound. Refine the
/// discretization or shorten the step that produced the configuration.
class ElementRotationBound final : public Error {
 public:
  using Error::Error;
};

/// The mean-strain recovery matrix A = h*I - (h^3/12) ad(beta) is numerically
/// singular (condition estimate above 1e8), which indicates an unphysically
/// large strain slope for the element length.
class SingularAMatrix final : public Error {
 public:
  using Error::Error;
};

/// Arc-length argument outside [0, element length].
class OutOfElement final : public Error {
 public:
  using Error::Error;
};

/// A pulley anchor coincides with its loaded node, so the cable direction
/// is undefined.
class PulleyCoincident final : public Error {
 public:
  using Error::Error;
};

/// The (damped) tangent stiffness could not be factorized.
class SingularTangent final : public Error {
 public:
  using Error::Error;
};

/// Structured input file violates the schema. The message carries the
/// offending field path.
class SchemaError final : public Error {
 public:
  using Error::Error;
};

}  // namespace rodstatics
