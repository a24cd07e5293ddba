#pragma once

#include <stdexcept>
#include <string>

namespace hmfg {

struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

struct PreconditionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct DegenerateDensityError : PreconditionError {
    using PreconditionError::PreconditionError;
};

struct StabilityError : std::runtime_error {
    double ratio;
    StabilityError(const std::string& what, double r) : std::runtime_error(what), ratio(r) {}
};

struct DivergenceError : std::runtime_error {
    int iteration;
    double step_product;
    DivergenceError(const std::string& what, int it, double prod)
        : std::runtime_error(what), iteration(it), step_product(prod) {}
};

}  // namespace hmfg
