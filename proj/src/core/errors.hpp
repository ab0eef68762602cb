#pragma once

#include <stdexcept>
#include <string>

namespace pconvex {

/// Input outside the mathematical domain of an operation (cone violation,
/// invalid (n, p), malformed grid).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Floating-point or factorization failure.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed configuration or command-line input.
class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

}  // namespace pconvex
