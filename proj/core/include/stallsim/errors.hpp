#pragma once

#include <stdexcept>
#include <string>

namespace stallsim {

// Input file could not be read or decoded.
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Decoded input violates an invariant; the message names the offending field.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Argument outside an operation's domain.
class DomainError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Run configuration is internally inconsistent (e.g. mismatched GPU totals).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace stallsim
