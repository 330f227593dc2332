#pragma once

#include <stdexcept>
#include <string>

namespace lfg {

/// Bad parameters, unknown names, order caps exceeded. CLI exit code 2.
struct config_error : std::invalid_argument {
    explicit config_error(const std::string& msg) : std::invalid_argument(msg) {}
};

/// Input outside the mathematical domain of an operation (spacelike vector
/// where a causal one is required, covector outside the polar cone, ...).
struct domain_error : std::domain_error {
    explicit domain_error(const std::string& msg) : std::domain_error(msg) {}
};

/// Numerical breakdown: singular fundamental tensor, Newton divergence,
/// step-size collapse. CLI exit code 3.
struct numerical_error : std::runtime_error {
    explicit numerical_error(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace lfg
