#pragma once

#include <stdexcept>
#include <string>

namespace sisalloc {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Argument outside the domain of a model function (rate out of bounds,
// malformed vector sizes, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

// An iterative method hit its iteration cap.
class ConvergenceError : public Error {
public:
    using Error::Error;
};

// No point satisfies the constraints.
class InfeasibleError : public Error {
public:
    using Error::Error;
};

// Integration or simulation step too coarse for the requested dynamics.
class StepSizeError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

} // namespace sisalloc
