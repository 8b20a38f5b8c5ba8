#pragma once

#include <stdexcept>
#include <string>

namespace varqqa {

/// Base class for every error the library throws.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input outside the domain of a (partial) Boolean function.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Invalid scalar parameter (family arguments, query index, plan bounds).
class ParameterError : public Error {
public:
    using Error::Error;
};

/// Dimension or count mismatch between cooperating objects.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Non-finite values, failed eigendecomposition, non-unitary input.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Malformed or corrupted file content.
class FormatError : public Error {
public:
    using Error::Error;
};

} // namespace varqqa
