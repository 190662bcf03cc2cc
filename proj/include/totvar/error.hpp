#pragma once

#include <stdexcept>
#include <string>

namespace totvar {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Violated precondition or malformed input (bad dimensions, schema errors).
class InvalidInput : public Error {
public:
    using Error::Error;
};

/// A numerical procedure could not produce a valid result.
class NumericalError : public Error {
public:
    using Error::Error;
};

} // namespace totvar
