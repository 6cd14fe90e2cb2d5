#pragma once

#include <stdexcept>
#include <string>

namespace effreg {

// Base for all library errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid argument values or violated preconditions.
struct DomainError : Error {
    explicit DomainError(const std::string& msg) : Error(msg) {}
};

// Singular or numerically unusable linear systems.
struct SingularError : Error {
    explicit SingularError(const std::string& msg) : Error(msg) {}
};

// Iterative procedure failed to converge.
struct ConvergenceError : Error {
    explicit ConvergenceError(const std::string& msg) : Error(msg) {}
};

// Malformed external input (CSV, JSON config).
struct InputError : Error {
    explicit InputError(const std::string& msg) : Error(msg) {}
};

} // namespace effreg
