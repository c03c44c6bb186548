#pragma once

#include <stdexcept>
#include <string>

namespace gmf {

/// Base class for all errors raised by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A covariance matrix failed validation (not symmetric or not positive
/// definite).  Raised at construction time; no repair is attempted.
struct SingularCovarianceError : Error {
  using Error::Error;
};

/// Vector/matrix dimensions do not agree with the object they are used with.
struct DimensionError : Error {
  using Error::Error;
};

/// A mixture (or weight vector) has no usable weight mass, or carries a
/// negative weight where that is not allowed.
struct DegenerateMixtureError : Error {
  using Error::Error;
};

/// A propagated function returned a non-finite value.  The message names the
/// offending input point.
struct PropagationError : Error {
  using Error::Error;
};

/// The transition Jacobian is numerically singular at a grid point, so the
/// grid-term covariance construction is undefined there.
struct NearSingularJacobianError : Error {
  using Error::Error;
};

/// The requested operation needs structure the model does not provide
/// (e.g. an additive time-shift decomposition of the transition function).
struct UnsupportedModelError : Error {
  using Error::Error;
};

/// The decomposition least-squares system is rank deficient; reduce the term
/// count or widen the shared variance.
struct IllConditionedDecompositionError : Error {
  using Error::Error;
};

/// The posterior no longer overlaps the decomposition's support, so the
/// predicted weights vanish.
struct SupportMismatchError : Error {
  using Error::Error;
};

/// Every mixture component's measurement evidence underflowed to zero.
struct DegenerateUpdateError : Error {
  using Error::Error;
};

/// Every particle weight vanished during a particle-filter step.
struct DegenerateParticleSetError : Error {
  using Error::Error;
};

/// Every grid mass vanished during a point-mass-filter step.
struct DegenerateGridError : Error {
  using Error::Error;
};

/// A persisted file (decomposition cache, trajectory, config) is malformed.
/// The message includes the location of the first offending line or key.
struct ParseError : Error {
  using Error::Error;
};

/// An experiment configuration is structurally valid but semantically
/// unusable (unknown keys, missing sections, out-of-range values).
struct ConfigError : Error {
  using Error::Error;
};

}  // namespace gmf
