#pragma once

#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "flm/adam.hpp"

namespace flm {

enum class StopReason { tolerance, epoch_cap, divergence };

const char* to_string(StopReason r);

struct TrainConfig {
    int max_epochs = 10000;
    double loss_tol = 1e-4;
    int log_every = 100; // loss-curve sampling stride
};

struct TrainReport {
    int epochs_run = 0;
    double final_loss = 0.0;
    StopReason stop_reason = StopReason::epoch_cap;
    std::vector<std::pair<int, double>> loss_curve; // (epoch, loss) samples
};

/// Full-batch loss callback: fills grad (same length as params) and returns
/// the loss at the given parameters.
using LossGradFn = std::function<double(std::span<const double>, std::span<double>)>;

/// Full-batch training loop. Each epoch evaluates the loss once, checks the
/// tolerance before stepping (so loss_tol = +inf stops at epoch 1 with zero
/// steps), then applies one update. A non-finite loss or gradient restores
/// the last finite parameters and stops with StopReason::divergence. The
/// final loss always equals the last loss-curve sample.
TrainReport train(std::vector<double>& params, const LossGradFn& fn, const AdamConfig& adam,
                  const TrainConfig& cfg, AdamState* state = nullptr);

/// Two training phases sharing one optimizer. Phase 2 keeps the moment
/// vectors unless reset_adam_state is set. Loss-curve epochs in the second
/// report continue the numbering of the first.
std::pair<TrainReport, TrainReport> train_two_phase(std::vector<double>& params,
                                                    const LossGradFn& fn, const AdamConfig& adam,
                                                    const TrainConfig& phase1,
                                                    const TrainConfig& phase2,
                                                    bool reset_adam_state = false);

} // namespace flm
