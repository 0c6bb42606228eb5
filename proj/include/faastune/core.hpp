#pragma once

#include <stdexcept>
#include <string>

namespace faastune {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Slicing or filtering removed the last evaluable configuration.
class SpaceExhaustedError : public Error {
public:
    using Error::Error;
};

/// A family identifier is not part of the declared family axis (or pricing table).
class UnknownFamilyError : public Error {
public:
    using Error::Error;
};

/// A configuration value does not lie on the declared axes.
class OffAxisError : public Error {
public:
    using Error::Error;
};

/// The pricing system has fewer independent equations than unknown rates.
class UnderdeterminedSystemError : public Error {
public:
    using Error::Error;
};

/// An overdetermined pricing system has no solution within tolerance.
class InconsistentSystemError : public Error {
public:
    using Error::Error;
};

/// Solving the pricing system produced a rate that is not positive.
class NegativeRateError : public Error {
public:
    using Error::Error;
};

/// A (function, input, config) key is absent from a recorded grid.
class MissingKeyError : public Error {
public:
    using Error::Error;
};

/// A precondition on arguments was violated.
class InvalidArgumentError : public Error {
public:
    using Error::Error;
};

} // namespace faastune
