#pragma once

#include <stdexcept>
#include <string>

namespace curvelab {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid input: wrong dimensions, non-closed exponent sets, violated
/// preconditions. The CLI maps these to exit code 1.
class DomainError : public Error {
public:
    using Error::Error;
};

/// A numerical procedure could not reach its tolerance (conditioning,
/// undecidable sign, exhausted budget). The CLI maps these to exit code 2.
class NumericalError : public Error {
public:
    using Error::Error;
};

} // namespace curvelab
