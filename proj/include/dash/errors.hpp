#pragma once

#include <stdexcept>
#include <string>

namespace dash {

// Error taxonomy. Each category maps onto one CLI exit code.
enum class ErrorKind { Validation = 1, Io = 2, Computation = 3 };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }
    int exit_code() const noexcept { return static_cast<int>(kind_); }

private:
    ErrorKind kind_;
};

// Bad input: out-of-range values, malformed files, failed preconditions.
class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& what) : Error(ErrorKind::Validation, what) {}
};

class RangeError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class ConfigError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(ErrorKind::Io, what) {}
};

// Numerical failure: non-finite arithmetic, singular systems, degenerate fits.
class ComputationError : public Error {
public:
    explicit ComputationError(const std::string& what) : Error(ErrorKind::Computation, what) {}
};

}  // namespace dash
