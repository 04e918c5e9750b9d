#pragma once

#include <stdexcept>
#include <string>

namespace ebs {

// Failure classes. The CLI maps them onto distinct exit codes.

struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Successive approximation or crossing search did not finish.
struct NonconvergenceError : std::runtime_error {
    NonconvergenceError(const std::string& what, double final_delta, int iterations = 0)
        : std::runtime_error(what), final_delta(final_delta), iterations(iterations) {}
    double final_delta;
    int iterations;
};

/// Time stepping produced a non-finite state; t is the last finite time.
struct DivergenceError : std::runtime_error {
    DivergenceError(const std::string& what, double t) : std::runtime_error(what), t(t) {}
    double t;
};

}  // namespace ebs
