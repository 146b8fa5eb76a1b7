#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pfd {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed design document. Line and column are 1-based; zero when unknown.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line, std::size_t column)
        : Error(what), line_(line), column_(column) {}

    [[nodiscard]] std::size_t line() const noexcept { return line_; }
    [[nodiscard]] std::size_t column() const noexcept { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

/// Schema violation or broken design invariant.
class DesignError : public Error {
public:
    using Error::Error;
};

/// Evaluation requested outside a tabulated range.
class RangeError : public Error {
public:
    using Error::Error;
};

/// Root or resonance search failed to find a sign change.
class NotFoundError : public Error {
public:
    using Error::Error;
};

/// A numerical quantity is undefined for this design (e.g. C_d = 0).
class ComputationError : public Error {
public:
    using Error::Error;
};

class UnsupportedTopologyError : public Error {
public:
    using Error::Error;
};

class BracketError : public Error {
public:
    using Error::Error;
};

/// Adaptive integrator could not keep the step above its floor.
class StiffnessError : public Error {
public:
    StiffnessError(const std::string& what, double time)
        : Error(what), time_(time) {}

    [[nodiscard]] double time() const noexcept { return time_; }

private:
    double time_;
};

class WindowError : public Error {
public:
    using Error::Error;
};

class NotSettledError : public Error {
public:
    using Error::Error;
};

}  // namespace pfd
