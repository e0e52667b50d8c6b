#pragma once

#include <stdexcept>
#include <string>

namespace ddpp {

// Base class for all library errors so callers can catch everything at once.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Input data breaks a documented precondition (bad costs, empty instance, ...).
struct ValidationError : Error {
    explicit ValidationError(const std::string& msg) : Error(msg) {}
};

// A file or string could not be parsed into the expected shape.
struct ParseError : Error {
    explicit ParseError(const std::string& msg) : Error(msg) {}
};

// Filesystem-level failure (missing file, unwritable path).
struct IoError : Error {
    explicit IoError(const std::string& msg) : Error(msg) {}
};

// Model construction produced coefficients outside the representable range.
struct BuildError : Error {
    explicit BuildError(const std::string& msg) : Error(msg) {}
};

// A solver hit an internal limit or inconsistency.
struct SolverError : Error {
    explicit SolverError(const std::string& msg) : Error(msg) {}
};

// No schedule satisfies the constraints with the given drone budget.
struct InfeasibleError : SolverError {
    explicit InfeasibleError(const std::string& msg) : SolverError(msg) {}
};

}  // namespace ddpp
