#include "flm/adam.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "flm/errors.hpp"

namespace flm {

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               const AdamConfig& cfg, long long t) {
    const std::size_t n = params.size();
    if (grads.size() != n)
        throw std::invalid_argument("adam_step: gradient size mismatch");
    if (t < 1)
        throw std::invalid_argument("adam_step: step index must be >= 1");
    if (state.m.size() != n) {
        state.m.assign(n, 0.0);
        state.v.assign(n, 0.0);
    }
    for (std::size_t i = 0; i < n; ++i)
        if (!std::isfinite(grads[i]))
            throw DivergenceError("adam_step: non-finite gradient at parameter " +
                                      std::to_string(i),
                                  i);

    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
    for (std::size_t i = 0; i < n; ++i) {
        state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * grads[i];
        state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * grads[i] * grads[i];
        const double mhat = state.m[i] / bc1;
        const double vhat = state.v[i] / bc2;
        params[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
}

} // namespace flm
