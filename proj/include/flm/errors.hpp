#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace flm {

/// Raised when a loss or gradient stops being finite during training.
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(const std::string& what, std::size_t param_index)
        : std::runtime_error(what), param_index_(param_index) {}

    std::size_t param_index() const noexcept { return param_index_; }

private:
    std::size_t param_index_;
};

/// Invalid run configuration (unknown problem name, bad grid, ...).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Shooting solver failed to drive the terminal costate to zero.
class ShootingError : public std::runtime_error {
public:
    ShootingError(const std::string& what, double residual)
        : std::runtime_error(what), residual_(residual) {}

    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

} // namespace flm
