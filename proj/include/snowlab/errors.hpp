#pragma once

#include <stdexcept>
#include <string>

namespace snowlab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    /// Short machine-parsable category used on the CLI diagnostic line.
    virtual const char* category() const noexcept { return "error"; }
};

/// Invalid caller input: bad level, bad index, dimension mismatch, malformed file.
class ArgumentError : public Error {
public:
    using Error::Error;
    const char* category() const noexcept override { return "invalid_argument"; }
};

/// A configured resource guard (mesh level, dense dimension) was exceeded.
class ResourceError : public Error {
public:
    using Error::Error;
    const char* category() const noexcept override { return "resource_guard"; }
};

/// A numerical routine failed to converge or produced residuals above tolerance.
class NumericalError : public Error {
public:
    using Error::Error;
    const char* category() const noexcept override { return "numerical_failure"; }
};

}  // namespace snowlab
