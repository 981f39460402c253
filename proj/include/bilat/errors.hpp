#pragma once
#include <stdexcept>
#include <string>

namespace bilat {

// Base for everything this library throws on purpose.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Bad inputs: violated preconditions, out-of-range parameters, malformed data.
class ValidationError : public Error {
public:
    using Error::Error;
};

// A numeric procedure failed: iteration did not converge, no peak/focus found,
// detection below noise floor, degenerate geometry in a solve.
class NumericError : public Error {
public:
    using Error::Error;
};

// Ray tracing failures.
class TraceError : public Error {
public:
    using Error::Error;
};

// Ray fell outside a surface aperture.
class VignettingError : public TraceError {
public:
    using TraceError::TraceError;
};

// Config file problems; carries enough text to name key and line.
class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace bilat
