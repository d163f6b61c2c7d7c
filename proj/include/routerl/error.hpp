// Exception types shared across the library.
#pragma once

#include <stdexcept>
#include <string>

namespace routerl {

// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad argument or configuration value (invalid sizes, non-positive rates, ...).
class ConfigError : public Error {
public:
    using Error::Error;
};

// A tour, action sequence, or route violates a problem constraint.
class FeasibilityError : public Error {
public:
    using Error::Error;
};

// Instance too large for an exact oracle.
class SizeCapError : public Error {
public:
    using Error::Error;
};

// An action forbidden by the current mask was sent to an environment.
class IllegalActionError : public Error {
public:
    using Error::Error;
};

// Environment queried past episode termination.
class TerminalStateError : public Error {
public:
    using Error::Error;
};

// Array batch/shape mismatch between producer and consumer.
class ShapeError : public Error {
public:
    using Error::Error;
};

// A required observation field is missing or empty; message names the key.
class SchemaError : public Error {
public:
    using Error::Error;
};

// An encoder cache was built under a different parameter version.
class StaleCacheError : public Error {
public:
    using Error::Error;
};

// Every action of some row is masked; no feasible action exists.
class NoFeasibleActionError : public Error {
public:
    using Error::Error;
};

// Non-finite loss or gradient during training.
class DivergenceError : public Error {
public:
    using Error::Error;
};

// Unreadable, corrupted, or version-mismatched file.
class FormatError : public Error {
public:
    using Error::Error;
};

}  // namespace routerl
