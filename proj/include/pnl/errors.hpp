#pragma once

#include <stdexcept>
#include <string>

namespace pnl {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A kernel was evaluated at (or too close to) its source point.
class SingularityError : public Error {
public:
    using Error::Error;
};

/// A gradient was requested where a neuron sits on a microphone or the reference point.
class DegenerateGeometryError : public Error {
public:
    using Error::Error;
};

/// Invalid user input: bad scenario, bad config, impossible placement request.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Non-finite loss or an otherwise failed numerical procedure.
class NumericError : public Error {
public:
    using Error::Error;
};

/// Least-squares system too ill-conditioned to solve.
class RankDeficiencyError : public NumericError {
public:
    RankDeficiencyError(const std::string& what, double condition)
        : NumericError(what), condition_(condition) {}
    double condition() const noexcept { return condition_; }

private:
    double condition_;
};

/// File missing, unreadable, or malformed.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace pnl
