#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "flm/model.hpp"
#include "flm/rng.hpp"

namespace testutil {

inline bool close(double a, double b, double rtol, double atol) {
    const double scale = std::max(std::abs(a), std::abs(b));
    return std::abs(a - b) <= std::max(atol, rtol * scale);
}

/// Model with random (generally non-integer) frequencies, amplitudes and
/// biases — exercises the representation away from the lattice init.
inline flm::FlmModel random_model(int m, int n_subnets, flm::Rng& rng, double freq_range = 4.0,
                                  double amp_range = 2.0) {
    flm::FlmModel model(m, n_subnets);
    for (auto& sn : model.subnets) {
        for (double& f : sn.freq)
            f = rng.uniform(-freq_range, freq_range);
        for (double& a : sn.amp)
            a = rng.uniform(-amp_range, amp_range);
        for (double& b : sn.bias)
            b = rng.uniform(-3.141592653589793, 3.141592653589793);
    }
    return model;
}

inline std::vector<double> random_point(int m, flm::Rng& rng, double range = 3.141592653589793) {
    std::vector<double> x(static_cast<std::size_t>(m));
    for (double& v : x)
        v = rng.uniform(-range, range);
    return x;
}

} // namespace testutil
