#pragma once

#include <stdexcept>
#include <string>

namespace twistlab {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad construction parameters (radii, node counts, dimensions).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// A map, field or config violates a stated invariant.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// |u| came too close to the origin for the energy or degree to make sense.
class DegeneracyError : public Error {
public:
    using Error::Error;
};

/// The grid is too coarse to resolve the quantity (angle jumps, vote split).
class ResolutionError : public Error {
public:
    using Error::Error;
};

/// A point fell outside the annulus covered by a grid.
class RangeError : public Error {
public:
    using Error::Error;
};

/// NaN or infinity in a field.
class NonFiniteError : public Error {
public:
    using Error::Error;
};

/// Requested level lies outside the range of the field.
class EmptyContourError : public Error {
public:
    using Error::Error;
};

/// Boundary value problem with no admissible solution.
class NoSolutionError : public Error {
public:
    using Error::Error;
};

/// Unsupported ambient dimension.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Iterative solver did not reach its tolerance.
class SolverError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

} // namespace twistlab
