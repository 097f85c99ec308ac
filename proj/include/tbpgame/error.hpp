#pragma once

#include <stdexcept>
#include <string>

namespace tbpgame {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input: geometry, coefficients, scenario files.
class InputError : public Error {
public:
    using Error::Error;
};

/// Linear solve breakdown, non-convergence or a singular system.
class SolverError : public Error {
public:
    using Error::Error;
};

/// A computed field violates a sign invariant (broken maximum principle).
class SignViolation : public SolverError {
public:
    using SolverError::SolverError;
};

} // namespace tbpgame
