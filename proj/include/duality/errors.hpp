#pragma once

#include <stdexcept>
#include <string>

namespace duality {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Invalid or inconsistent apparatus/run configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Detector placement is impossible for the given configuration
/// (no fringes to bracket, coincident which-way spots, ...).
class PlacementError : public Error {
public:
    using Error::Error;
};

/// A root search has no solution on its admissible interval.
class NoSolutionError : public Error {
public:
    using Error::Error;
};

/// A derived metric is undefined (zero denominator, no gates, ...).
class MetricUndefinedError : public Error {
public:
    using Error::Error;
};

/// Least-squares fit rejected: residual incompatible with counting noise.
class FitError : public Error {
public:
    using Error::Error;
};

/// Operation requested for a model that does not support it.
class ModelMismatchError : public Error {
public:
    using Error::Error;
};

/// Experiment file syntax or schema violation, with source location.
class ParseError : public Error {
public:
    ParseError(const std::string& what, int line)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

} // namespace duality
