#include "flm/reference.hpp"

#include <stdexcept>

namespace flm::reference {

PenaltyLoss penalty_loss(const OcpNets& nets, const std::vector<Vec3>& u0s, const OcpConfig& cfg) {
    if (u0s.empty())
        throw std::invalid_argument("reference::penalty_loss: empty batch");
    const int m = nets.mode == OcpMode::fixed_ic ? 1 : 3;
    const std::size_t q = static_cast<std::size_t>(cfg.quad_n);
    const double h = cfg.horizon / static_cast<double>(q - 1);
    const std::size_t pn[3] = {nets.u1.param_count(), nets.u2.param_count(),
                               nets.control.param_count()};
    const std::size_t off[3] = {0, pn[0], pn[0] + pn[1]};
    const std::size_t ptot = pn[0] + pn[1] + pn[2];

    PenaltyLoss out;
    out.grad.assign(ptot, 0.0);

    EvalBundle b1, b2, bg;
    std::vector<double> x(static_cast<std::size_t>(m));
    for (const Vec3& u0 : u0s) {
        if (m == 3) {
            x[1] = u0[0];
            x[2] = u0[1];
        }
        double obj = 0.0;
        Vec3 vdyn{}, vinit{};
        std::vector<double> grad(ptot, 0.0);
        for (std::size_t k = 0; k < q; ++k) {
            const double tk = h * static_cast<double>(k);
            const double wk = (k == 0 || k + 1 == q) ? 0.5 * h : h;
            x[0] = tk;
            eval_bundle(nets.u1, x, 1, b1);
            eval_bundle(nets.u2, x, 1, b2);
            eval_bundle(nets.control, x, 0, bg);

            const Vec3 u{b1.value, b2.value, 1.0 - b1.value - b2.value};
            const Vec3 ud{b1.grad_x[0], b2.grad_x[0], -b1.grad_x[0] - b2.grad_x[0]};
            const double g = bg.value;

            Vec3 f{}, gg{};
            replicator_raw(u, rps_payoff(), f);
            replicator_raw(u, rps_actuation(), gg);
            Mat3 jf{}, jg{};
            replicator_jacobian(u, rps_payoff(), jf);
            replicator_jacobian(u, rps_actuation(), jg);

            Vec3 rho{};
            for (int c = 0; c < 3; ++c)
                rho[c] = ud[c] - f[c] - g * gg[c];

            double track = 0.0;
            for (int c = 0; c < 3; ++c)
                track += (u[c] - cfg.target[c]) * (u[c] - cfg.target[c]);
            obj += wk * (0.5 * track + 0.5 * cfg.control_weight * g * g);
            for (int c = 0; c < 3; ++c)
                vdyn[c] += wk * rho[c] * rho[c];

            double jcol0 = 0.0, jcol1 = 0.0, gdot = 0.0;
            for (int c = 0; c < 3; ++c) {
                const double mu_rho = cfg.mu_dyn[c] * rho[c];
                jcol0 += mu_rho * (jf[c][0] + g * jg[c][0] - jf[c][2] - g * jg[c][2]);
                jcol1 += mu_rho * (jf[c][1] + g * jg[c][1] - jf[c][2] - g * jg[c][2]);
                gdot += mu_rho * gg[c];
            }
            double cv1 = wk * ((u[0] - cfg.target[0]) - (u[2] - cfg.target[2]) - jcol0);
            double cd1 = wk * (cfg.mu_dyn[0] * rho[0] - cfg.mu_dyn[2] * rho[2]);
            double cv2 = wk * ((u[1] - cfg.target[1]) - (u[2] - cfg.target[2]) - jcol1);
            double cd2 = wk * (cfg.mu_dyn[1] * rho[1] - cfg.mu_dyn[2] * rho[2]);
            const double cg = wk * (cfg.control_weight * g - gdot);

            if (k == 0) {
                Vec3 e0{};
                for (int c = 0; c < 3; ++c) {
                    e0[c] = u[c] - u0[c];
                    vinit[c] = e0[c] * e0[c];
                }
                cv1 += cfg.mu_init[0] * e0[0] - cfg.mu_init[2] * e0[2];
                cv2 += cfg.mu_init[1] * e0[1] - cfg.mu_init[2] * e0[2];
            }

            for (std::size_t p = 0; p < pn[0]; ++p)
                grad[off[0] + p] += cv1 * b1.value_pg[p] + cd1 * b1.grad_pg[p];
            for (std::size_t p = 0; p < pn[1]; ++p)
                grad[off[1] + p] += cv2 * b2.value_pg[p] + cd2 * b2.grad_pg[p];
            for (std::size_t p = 0; p < pn[2]; ++p)
                grad[off[2] + p] += cg * bg.value_pg[p];
        }
        double loss = obj;
        for (int c = 0; c < 3; ++c)
            loss += 0.5 * cfg.mu_dyn[c] * vdyn[c] + 0.5 * cfg.mu_init[c] * vinit[c];
        out.loss += loss;
        out.mean_objective += obj;
        for (int c = 0; c < 3; ++c) {
            out.mean_dyn_violation[c] += vdyn[c];
            out.mean_init_violation[c] += vinit[c];
        }
        for (std::size_t p = 0; p < ptot; ++p)
            out.grad[p] += grad[p];
    }
    const double inv = 1.0 / static_cast<double>(u0s.size());
    out.loss *= inv;
    out.mean_objective *= inv;
    for (int c = 0; c < 3; ++c) {
        out.mean_dyn_violation[c] *= inv;
        out.mean_init_violation[c] *= inv;
    }
    for (std::size_t p = 0; p < ptot; ++p)
        out.grad[p] *= inv;
    return out;
}

} // namespace flm::reference
