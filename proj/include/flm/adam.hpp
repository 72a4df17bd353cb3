#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace flm {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8; // added outside the square root
};

struct AdamState {
    std::vector<double> m; // first moments
    std::vector<double> v; // second moments
};

/// One bias-corrected update, step index t >= 1. Non-finite gradient entries
/// raise DivergenceError carrying the offending index; params stay untouched.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               const AdamConfig& cfg, long long t);

} // namespace flm
