#pragma once

#include <stdexcept>
#include <string>

namespace qtube {

/// Bad run configuration (file contents, preset overrides, CLI input).
/// Maps to process exit code 2.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numerical failure at run time (instability, escaped trajectory,
/// ordering violation, degenerate state). Maps to process exit code 3.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace qtube
