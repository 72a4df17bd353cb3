// Timing harness for the two training hot loops: the PDE collocation loss
// and the OCP penalty loss. Each fused/parallel variant is checked against
// its plain counterpart before being timed.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <vector>

#include "flm/ocp.hpp"
#include "flm/parallel.hpp"
#include "flm/pde.hpp"
#include "flm/reference.hpp"
#include "flm/rng.hpp"

namespace {

using clock_type = std::chrono::steady_clock;

template <class Fn> double ms_per_call(int reps, const Fn& fn) {
    fn(); // warm-up
    const auto t0 = clock_type::now();
    for (int i = 0; i < reps; ++i)
        fn();
    return std::chrono::duration<double, std::milli>(clock_type::now() - t0).count() / reps;
}

double rel_diff(double a, double b) {
    const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
    return std::abs(a - b) / scale;
}

double max_grad_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        worst = std::max(worst, rel_diff(a[i], b[i]));
    return worst;
}

} // namespace

int main(int argc, char** argv) {
    int threads = 0;
    if (argc > 1)
        threads = std::atoi(argv[1]);
    if (threads > 0)
        flm::set_threads(threads);
    std::printf("threads: %d\n\n", flm::thread_count());

    { // PDE loss: heat at the acceptance configuration.
        const flm::PdeProblem problem = flm::make_problem("heat");
        const flm::CollocationSet colloc = flm::sample_collocation(problem, 100, 200, 1000, 1);
        flm::Rng rng(2);
        flm::FlmModel model = flm::init_model(2, 16, 3);
        for (auto& sn : model.subnets)
            for (auto* vec : {&sn.amp, &sn.bias})
                for (double& v : *vec)
                    v += rng.uniform(-0.5, 0.5);

        const flm::PdeLoss serial = flm::pde_loss(model, problem, colloc, flm::Exec::serial);
        const flm::PdeLoss parallel = flm::pde_loss(model, problem, colloc, flm::Exec::parallel);
        std::printf("pde_loss (heat, N=16, 1300 points)\n");
        std::printf("  loss serial/parallel bitwise equal: %s\n",
                    serial.total == parallel.total &&
                            max_grad_diff(serial.grad, parallel.grad) == 0.0
                        ? "yes"
                        : "NO");
        const double ms_s = ms_per_call(
            50, [&] { (void)flm::pde_loss(model, problem, colloc, flm::Exec::serial); });
        const double ms_p = ms_per_call(
            50, [&] { (void)flm::pde_loss(model, problem, colloc, flm::Exec::parallel); });
        std::printf("  serial   %8.3f ms/epoch\n", ms_s);
        std::printf("  parallel %8.3f ms/epoch (%.2fx)\n\n", ms_p, ms_s / ms_p);
    }

    { // Penalty loss: varying-IC configuration at smoke scale.
        flm::OcpConfig cfg;
        flm::OcpNets nets = flm::make_ocp_nets(flm::OcpMode::varying_ic, 27, 4);
        {
            flm::Rng rng(5);
            std::vector<double> flat(nets.param_count());
            nets.pack(flat);
            for (double& v : flat)
                v += rng.uniform(-0.3, 0.3);
            nets.unpack(flat);
        }
        const std::vector<flm::Vec3> batch = flm::sample_disk({0.2, 0.2, 0.6}, 0.15, 50, 6);

        const flm::PenaltyLoss ref = flm::reference::penalty_loss(nets, batch, cfg);
        const flm::PenaltyLoss fast_s = flm::penalty_loss(nets, batch, cfg, flm::Exec::serial);
        const flm::PenaltyLoss fast_p = flm::penalty_loss(nets, batch, cfg, flm::Exec::parallel);
        std::printf("penalty_loss (varying mode, N=27, 50 ICs, quad 101)\n");
        std::printf("  fused vs plain: loss rel %.2e, grad rel %.2e\n",
                    rel_diff(fast_s.loss, ref.loss), max_grad_diff(fast_s.grad, ref.grad));
        std::printf("  fused serial/parallel bitwise equal: %s\n",
                    fast_s.loss == fast_p.loss && max_grad_diff(fast_s.grad, fast_p.grad) == 0.0
                        ? "yes"
                        : "NO");
        const double ms_ref =
            ms_per_call(3, [&] { (void)flm::reference::penalty_loss(nets, batch, cfg); });
        const double ms_s = ms_per_call(
            10, [&] { (void)flm::penalty_loss(nets, batch, cfg, flm::Exec::serial); });
        const double ms_p = ms_per_call(
            10, [&] { (void)flm::penalty_loss(nets, batch, cfg, flm::Exec::parallel); });
        std::printf("  plain bundle   %8.2f ms/epoch\n", ms_ref);
        std::printf("  fused serial   %8.2f ms/epoch (%.1fx over plain)\n", ms_s, ms_ref / ms_s);
        std::printf("  fused parallel %8.2f ms/epoch (%.2fx over fused serial)\n", ms_p,
                    ms_s / ms_p);
    }
    return 0;
}
