#pragma once

#include <stdexcept>
#include <string>

namespace topopt {

/// Input rejected by a precondition check (sizes, ranges, indices).
using InvalidArgument = std::invalid_argument;

/// A mask or case definition leaves no usable domain.
class InvalidDomain : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The linear solver failed to reach the requested residual.
class SolverFailure : public std::runtime_error {
public:
    SolverFailure(const std::string& what, double residual)
        : std::runtime_error(what), residual_(residual) {}

    /// Relative residual ||K u - f|| / ||f|| at the point of failure.
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

/// Box bounds cannot meet the volume target.
class Infeasible : public std::runtime_error {
public:
    enum class Side { lower, upper };

    Infeasible(const std::string& what, Side side)
        : std::runtime_error(what), side_(side) {}

    /// `lower`: the lower bounds alone already exceed the target volume.
    /// `upper`: the upper bounds cannot reach the target volume.
    Side side() const noexcept { return side_; }

private:
    Side side_;
};

/// Operation requested under a material model it is not valid for.
class ModeError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

class MultiplierNotFound : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class UndefinedMetric : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidCase : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Configuration text failed to parse or validate; carries the 1-based line.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, int line)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
          line_(line) {}

    int line() const noexcept { return line_; }

private:
    int line_;
};

}  // namespace topopt
