#include "flm/train.hpp"

#include <cmath>
#include <limits>

#include "flm/errors.hpp"

namespace flm {

const char* to_string(StopReason r) {
    switch (r) {
    case StopReason::tolerance: return "tolerance";
    case StopReason::epoch_cap: return "epoch_cap";
    default: return "divergence";
    }
}

namespace {

void sample_curve(TrainReport& rep, int epoch, int local_epoch, double loss, int log_every,
                  bool force) {
    if (force || local_epoch == 1 || (log_every > 0 && epoch % log_every == 0)) {
        if (!rep.loss_curve.empty() && rep.loss_curve.back().first == epoch)
            rep.loss_curve.back().second = loss;
        else
            rep.loss_curve.emplace_back(epoch, loss);
    }
}

TrainReport train_impl(std::vector<double>& params, const LossGradFn& fn, const AdamConfig& adam,
                       const TrainConfig& cfg, AdamState& state, long long& step,
                       int epoch_offset) {
    TrainReport rep;
    rep.final_loss = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> grad(params.size());
    std::vector<double> last_good = params;

    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        const double loss = fn(params, grad);
        rep.epochs_run = epoch;
        if (!std::isfinite(loss)) {
            params = last_good;
            rep.stop_reason = StopReason::divergence;
            sample_curve(rep, epoch_offset + epoch, epoch, rep.final_loss, cfg.log_every, true);
            return rep;
        }
        rep.final_loss = loss;
        sample_curve(rep, epoch_offset + epoch, epoch, loss, cfg.log_every, false);
        if (loss <= cfg.loss_tol) {
            rep.stop_reason = StopReason::tolerance;
            sample_curve(rep, epoch_offset + epoch, epoch, loss, cfg.log_every, true);
            return rep;
        }
        last_good = params;
        try {
            adam_step(params, grad, state, adam, ++step);
        } catch (const DivergenceError&) {
            // params are untouched and produced the last finite loss
            rep.stop_reason = StopReason::divergence;
            sample_curve(rep, epoch_offset + epoch, epoch, loss, cfg.log_every, true);
            return rep;
        }
    }
    rep.stop_reason = StopReason::epoch_cap;
    if (rep.epochs_run > 0)
        sample_curve(rep, epoch_offset + rep.epochs_run, rep.epochs_run, rep.final_loss, cfg.log_every, true);
    return rep;
}

} // namespace

TrainReport train(std::vector<double>& params, const LossGradFn& fn, const AdamConfig& adam,
                  const TrainConfig& cfg, AdamState* state) {
    AdamState local;
    AdamState& st = state ? *state : local;
    long long step = 0;
    return train_impl(params, fn, adam, cfg, st, step, 0);
}

std::pair<TrainReport, TrainReport> train_two_phase(std::vector<double>& params,
                                                    const LossGradFn& fn, const AdamConfig& adam,
                                                    const TrainConfig& phase1,
                                                    const TrainConfig& phase2,
                                                    bool reset_adam_state) {
    AdamState state;
    long long step = 0;
    TrainReport r1 = train_impl(params, fn, adam, phase1, state, step, 0);
    if (r1.stop_reason == StopReason::divergence) {
        TrainReport r2;
        r2.final_loss = r1.final_loss;
        r2.stop_reason = StopReason::divergence;
        return {r1, r2};
    }
    if (reset_adam_state) {
        state = AdamState{};
        step = 0;
    }
    TrainReport r2 = train_impl(params, fn, adam, phase2, state, step, r1.epochs_run);
    return {r1, r2};
}

} // namespace flm
