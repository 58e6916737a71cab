#pragma once

#include <stdexcept>
#include <string>

namespace said {

// Bad user input: malformed configuration, schema violations, dimension or
// domain mismatches. Maps to CLI exit code 2.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failure at run time: non-positive-definite systems, degenerate
// inputs, sampler breakdown. Maps to CLI exit code 3.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace said
