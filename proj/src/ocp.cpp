#include "flm/ocp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "flm/errors.hpp"
#include "flm/rng.hpp"

namespace flm {

namespace {

int mode_dim(OcpMode mode) { return mode == OcpMode::fixed_ic ? 1 : 3; }

void check_batch(const std::vector<Vec3>& u0s) {
    if (u0s.empty())
        throw std::invalid_argument("penalty_loss: empty initial-condition batch");
    for (const auto& u0 : u0s)
        if (!on_simplex(u0, 1e-9))
            throw std::invalid_argument("penalty_loss: initial condition off the simplex");
}

std::vector<double> quad_weights(int q, double h) {
    std::vector<double> w(static_cast<std::size_t>(q), h);
    w.front() = 0.5 * h;
    w.back() = 0.5 * h;
    return w;
}

} // namespace

std::size_t OcpNets::param_count() const {
    return u1.param_count() + u2.param_count() + control.param_count();
}

void OcpNets::pack(std::span<double> out) const {
    const std::size_t p1 = u1.param_count(), p2 = u2.param_count();
    u1.pack(out.subspan(0, p1));
    u2.pack(out.subspan(p1, p2));
    control.pack(out.subspan(p1 + p2));
}

void OcpNets::unpack(std::span<const double> in) {
    const std::size_t p1 = u1.param_count(), p2 = u2.param_count();
    u1.unpack(in.subspan(0, p1));
    u2.unpack(in.subspan(p1, p2));
    control.unpack(in.subspan(p1 + p2));
}

OcpNets make_ocp_nets(OcpMode mode, int n_subnets, std::uint64_t seed, double bias_sigma) {
    OcpNets nets;
    nets.mode = mode;
    const int m = mode_dim(mode);
    nets.u1 = init_model(m, n_subnets, derive_seed(seed, 0), bias_sigma);
    nets.u2 = init_model(m, n_subnets, derive_seed(seed, 1), bias_sigma);
    nets.control = init_model(m, n_subnets, derive_seed(seed, 2), bias_sigma);
    return nets;
}

namespace {

// Per-call trig tables: unit biases once per network, the per-coordinate
// angles once per (subnet, grid value). The per-point work then reduces to
// angle-sum products, which keeps the training loop off libm.
struct NetTables {
    const FlmModel* net = nullptr;
    int n = 0, l = 0, m = 0;
    std::vector<double> cb, sb; // [s*l + i], bias rotations
    std::vector<double> ct, st; // [s*q + k], time angles
    std::vector<double> cu, su; // [(c-1)*n*b + s*b + ic], IC-coordinate angles
};

NetTables build_tables(const FlmModel& net, const std::vector<double>& tgrid,
                       const std::vector<Vec3>& u0s) {
    NetTables tb;
    tb.net = &net;
    tb.n = net.subnet_count();
    tb.l = net.units_per_subnet();
    tb.m = net.m;
    const std::size_t q = tgrid.size();
    const std::size_t b = u0s.size();
    tb.cb.resize(static_cast<std::size_t>(tb.n) * tb.l);
    tb.sb.resize(tb.cb.size());
    tb.ct.resize(static_cast<std::size_t>(tb.n) * q);
    tb.st.resize(tb.ct.size());
    if (tb.m > 1) {
        tb.cu.resize(static_cast<std::size_t>(tb.m - 1) * tb.n * b);
        tb.su.resize(tb.cu.size());
    }
    for (int s = 0; s < tb.n; ++s) {
        const auto& sn = net.subnets[static_cast<std::size_t>(s)];
        for (int i = 0; i < tb.l; ++i) {
            tb.cb[static_cast<std::size_t>(s) * tb.l + i] = std::cos(sn.bias[i]);
            tb.sb[static_cast<std::size_t>(s) * tb.l + i] = std::sin(sn.bias[i]);
        }
        for (std::size_t k = 0; k < q; ++k) {
            const double a = sn.freq[0] * tgrid[k];
            tb.ct[static_cast<std::size_t>(s) * q + k] = std::cos(a);
            tb.st[static_cast<std::size_t>(s) * q + k] = std::sin(a);
        }
        for (int c = 1; c < tb.m; ++c)
            for (std::size_t ic = 0; ic < b; ++ic) {
                const double a = sn.freq[c] * u0s[ic][c - 1];
                const std::size_t at =
                    (static_cast<std::size_t>(c - 1) * tb.n + s) * b + ic;
                tb.cu[at] = std::cos(a);
                tb.su[at] = std::sin(a);
            }
    }
    return tb;
}

// Fills per-unit cos/sin of (w . x - bias) for every unit of every subnet at
// grid point k of initial condition ic. Unit order matches the sign-matrix
// rows: the doubling step appends the +1 branch before the -1 branch.
void fill_unit_trig(const NetTables& tb, std::size_t q, std::size_t b, std::size_t k,
                    std::size_t ic, double* uc, double* us) {
    double pc[32], ps[32];
    for (int s = 0; s < tb.n; ++s) {
        pc[0] = tb.ct[static_cast<std::size_t>(s) * q + k];
        ps[0] = tb.st[static_cast<std::size_t>(s) * q + k];
        int cnt = 1;
        for (int c = 1; c < tb.m; ++c) {
            const std::size_t at = (static_cast<std::size_t>(c - 1) * tb.n + s) * b + ic;
            const double cc = tb.cu[at];
            const double ss = tb.su[at];
            for (int p = cnt - 1; p >= 0; --p) {
                const double pcv = pc[p], psv = ps[p];
                pc[2 * p] = pcv * cc - psv * ss;
                ps[2 * p] = psv * cc + pcv * ss;
                pc[2 * p + 1] = pcv * cc + psv * ss;
                ps[2 * p + 1] = psv * cc - pcv * ss;
            }
            cnt *= 2;
        }
        const std::size_t base = static_cast<std::size_t>(s) * tb.l;
        for (int i = 0; i < tb.l; ++i) {
            const double cbv = tb.cb[base + i], sbv = tb.sb[base + i];
            uc[base + i] = pc[i] * cbv + ps[i] * sbv;
            us[base + i] = ps[i] * cbv - pc[i] * sbv;
        }
    }
}

struct IcPartial {
    double loss = 0.0;
    double obj = 0.0;
    Vec3 vdyn{};
    Vec3 vinit{};
    std::vector<double> grad;
};

} // namespace

PenaltyLoss penalty_loss(const OcpNets& nets, const std::vector<Vec3>& u0s, const OcpConfig& cfg,
                         Exec exec) {
    check_batch(u0s);
    if (cfg.quad_n < 2)
        throw std::invalid_argument("penalty_loss: quad_n must be >= 2");
    const int m = mode_dim(nets.mode);
    if (nets.u1.m != m || nets.u2.m != m || nets.control.m != m)
        throw std::invalid_argument("penalty_loss: network dimension does not match the mode");

    const std::size_t q = static_cast<std::size_t>(cfg.quad_n);
    const std::size_t b = u0s.size();
    const double h = cfg.horizon / static_cast<double>(q - 1);
    std::vector<double> tgrid(q);
    for (std::size_t k = 0; k < q; ++k)
        tgrid[k] = h * static_cast<double>(k);
    const std::vector<double> wq = quad_weights(cfg.quad_n, h);

    const NetTables tabs[3] = {build_tables(nets.u1, tgrid, u0s),
                               build_tables(nets.u2, tgrid, u0s),
                               build_tables(nets.control, tgrid, u0s)};
    const std::size_t pn[3] = {nets.u1.param_count(), nets.u2.param_count(),
                               nets.control.param_count()};
    const std::size_t off[3] = {0, pn[0], pn[0] + pn[1]};
    const std::size_t ptot = pn[0] + pn[1] + pn[2];

    const Mat3 lmat = rps_payoff();
    const Mat3 mmat = rps_actuation();

    std::vector<IcPartial> partials;
    for_blocks(
        b, 1, partials,
        [&](std::size_t lo, std::size_t hi, IcPartial& part) {
            part = IcPartial{};
            part.grad.assign(ptot, 0.0);
            std::vector<double> uc[3], us[3];
            for (int v = 0; v < 3; ++v) {
                uc[v].resize(static_cast<std::size_t>(tabs[v].n) * tabs[v].l);
                us[v].resize(uc[v].size());
            }
            for (std::size_t ic = lo; ic < hi; ++ic) {
                const Vec3& u0 = u0s[ic];
                for (std::size_t k = 0; k < q; ++k) {
                    double val[3], dv[3];
                    for (int v = 0; v < 3; ++v) {
                        fill_unit_trig(tabs[v], q, b, k, ic, uc[v].data(), us[v].data());
                        const FlmModel& net = *tabs[v].net;
                        double sum = 0.0, dsum = 0.0;
                        for (int s = 0; s < tabs[v].n; ++s) {
                            const auto& sn = net.subnets[static_cast<std::size_t>(s)];
                            const double n0 = sn.freq[0];
                            const std::size_t base = static_cast<std::size_t>(s) * tabs[v].l;
                            for (int i = 0; i < tabs[v].l; ++i) {
                                const double a = sn.amp[i];
                                sum += a * uc[v][base + i];
                                dsum -= a * n0 * us[v][base + i];
                            }
                        }
                        val[v] = sum;
                        dv[v] = dsum;
                    }
                    const Vec3 u{val[0], val[1], 1.0 - val[0] - val[1]};
                    const Vec3 ud{dv[0], dv[1], -dv[0] - dv[1]};
                    const double g = val[2];

                    Vec3 f{}, gg{};
                    replicator_raw(u, lmat, f);
                    replicator_raw(u, mmat, gg);
                    Mat3 jf{}, jg{};
                    replicator_jacobian(u, lmat, jf);
                    replicator_jacobian(u, mmat, jg);

                    Vec3 rho{};
                    for (int c = 0; c < 3; ++c)
                        rho[c] = ud[c] - f[c] - g * gg[c];

                    const double wk = wq[k];
                    double track = 0.0;
                    for (int c = 0; c < 3; ++c)
                        track += (u[c] - cfg.target[c]) * (u[c] - cfg.target[c]);
                    part.obj += wk * (0.5 * track + 0.5 * cfg.control_weight * g * g);
                    for (int c = 0; c < 3; ++c)
                        part.vdyn[c] += wk * rho[c] * rho[c];

                    Vec3 dsum{};
                    for (int c = 0; c < 3; ++c)
                        dsum[c] = cfg.mu_dyn[c] * rho[c];
                    double jcol0 = 0.0, jcol1 = 0.0, gdot = 0.0;
                    for (int c = 0; c < 3; ++c) {
                        const double j0 = jf[c][0] + g * jg[c][0];
                        const double j1 = jf[c][1] + g * jg[c][1];
                        const double j2 = jf[c][2] + g * jg[c][2];
                        jcol0 += dsum[c] * (j0 - j2);
                        jcol1 += dsum[c] * (j1 - j2);
                        gdot += dsum[c] * gg[c];
                    }
                    double cv[2], cd[2];
                    cv[0] = wk * ((u[0] - cfg.target[0]) - (u[2] - cfg.target[2]) - jcol0);
                    cd[0] = wk * (dsum[0] - dsum[2]);
                    cv[1] = wk * ((u[1] - cfg.target[1]) - (u[2] - cfg.target[2]) - jcol1);
                    cd[1] = wk * (dsum[1] - dsum[2]);
                    double cg = wk * (cfg.control_weight * g - gdot);

                    if (k == 0) {
                        Vec3 e0{};
                        for (int c = 0; c < 3; ++c) {
                            e0[c] = u[c] - u0[c];
                            part.vinit[c] = e0[c] * e0[c];
                        }
                        cv[0] += cfg.mu_init[0] * e0[0] - cfg.mu_init[2] * e0[2];
                        cv[1] += cfg.mu_init[1] * e0[1] - cfg.mu_init[2] * e0[2];
                    }

                    // Fused parameter-gradient accumulation.
                    const double tk = tgrid[k];
                    for (int v = 0; v < 2; ++v) {
                        const FlmModel& net = *tabs[v].net;
                        const std::size_t per = net.params_per_subnet();
                        double* gout = part.grad.data() + off[v];
                        for (int s = 0; s < tabs[v].n; ++s) {
                            const auto& sn = net.subnets[static_cast<std::size_t>(s)];
                            const double n0 = sn.freq[0];
                            const std::size_t base = static_cast<std::size_t>(s) * tabs[v].l;
                            double* gs = gout + static_cast<std::size_t>(s) * per;
                            for (int i = 0; i < tabs[v].l; ++i) {
                                const double c = uc[v][base + i];
                                const double si = us[v][base + i];
                                const double a = sn.amp[i];
                                const double kk = cv[v] * si + cd[v] * n0 * c;
                                gs[m + i] += cv[v] * c - cd[v] * n0 * si;
                                gs[m + tabs[v].l + i] += a * kk;
                                gs[0] += -a * (tk * kk + cd[v] * si);
                                for (int cdim = 1; cdim < m; ++cdim)
                                    gs[cdim] += -a * net.sign.entry(i, cdim) * u0[cdim - 1] * kk;
                            }
                        }
                    }
                    {
                        const FlmModel& net = *tabs[2].net;
                        const std::size_t per = net.params_per_subnet();
                        double* gout = part.grad.data() + off[2];
                        for (int s = 0; s < tabs[2].n; ++s) {
                            const auto& sn = net.subnets[static_cast<std::size_t>(s)];
                            const std::size_t base = static_cast<std::size_t>(s) * tabs[2].l;
                            double* gs = gout + static_cast<std::size_t>(s) * per;
                            for (int i = 0; i < tabs[2].l; ++i) {
                                const double c = uc[2][base + i];
                                const double si = us[2][base + i];
                                const double a = sn.amp[i];
                                gs[m + i] += cg * c;
                                gs[m + tabs[2].l + i] += a * cg * si;
                                gs[0] += -a * cg * si * tk;
                                for (int cdim = 1; cdim < m; ++cdim)
                                    gs[cdim] +=
                                        -a * net.sign.entry(i, cdim) * u0[cdim - 1] * cg * si;
                            }
                        }
                    }
                }
            }
            // One initial condition per block; fold the penalty pieces into
            // the scalar loss.
            double pen = 0.0;
            for (int c = 0; c < 3; ++c)
                pen += 0.5 * cfg.mu_dyn[c] * part.vdyn[c] + 0.5 * cfg.mu_init[c] * part.vinit[c];
            part.loss = part.obj + pen;
        },
        exec);

    PenaltyLoss out;
    out.grad.assign(ptot, 0.0);
    for (const auto& part : partials) {
        out.loss += part.loss;
        out.mean_objective += part.obj;
        for (int c = 0; c < 3; ++c) {
            out.mean_dyn_violation[c] += part.vdyn[c];
            out.mean_init_violation[c] += part.vinit[c];
        }
        for (std::size_t p = 0; p < ptot; ++p)
            out.grad[p] += part.grad[p];
    }
    const double inv = 1.0 / static_cast<double>(b);
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

Trajectory rollout(const OcpNets& nets, const Vec3& u0, const OcpConfig& cfg) {
    const int m = mode_dim(nets.mode);
    Trajectory traj;
    const std::size_t q = static_cast<std::size_t>(cfg.quad_n);
    const double h = cfg.horizon / static_cast<double>(q - 1);
    traj.t.resize(q);
    traj.u.resize(q);
    traj.gamma.resize(q);
    std::vector<double> x(static_cast<std::size_t>(m));
    if (m == 3) {
        x[1] = u0[0];
        x[2] = u0[1];
    }
    for (std::size_t k = 0; k < q; ++k) {
        traj.t[k] = h * static_cast<double>(k);
        x[0] = traj.t[k];
        const double v1 = eval(nets.u1, x);
        const double v2 = eval(nets.u2, x);
        traj.u[k] = {v1, v2, 1.0 - v1 - v2};
        traj.gamma[k] = eval(nets.control, x);
    }
    return traj;
}

double objective(const Trajectory& traj, const OcpConfig& cfg) {
    const std::size_t q = traj.t.size();
    if (q < 2 || traj.u.size() != q || traj.gamma.size() != q)
        throw std::invalid_argument("objective: trajectory arrays are inconsistent");
    double total = 0.0;
    for (std::size_t k = 0; k < q; ++k) {
        double track = 0.0;
        for (int c = 0; c < 3; ++c)
            track += (traj.u[k][c] - cfg.target[c]) * (traj.u[k][c] - cfg.target[c]);
        const double f = 0.5 * track + 0.5 * cfg.control_weight * traj.gamma[k] * traj.gamma[k];
        const double w = (k == 0 || k == q - 1) ? 0.5 : 1.0;
        total += w * f * (traj.t[1] - traj.t[0]);
    }
    return total;
}

std::vector<Vec3> sample_disk(const Vec3& center, double radius, int count, std::uint64_t seed) {
    const double s2 = std::sqrt(2.0), s6 = std::sqrt(6.0);
    return sample_disk(center, radius, count, seed, Vec3{1.0 / s2, -1.0 / s2, 0.0},
                       Vec3{1.0 / s6, 1.0 / s6, -2.0 / s6});
}

std::vector<Vec3> sample_disk(const Vec3& center, double radius, int count, std::uint64_t seed,
                              const Vec3& basis1, const Vec3& basis2) {
    if (count < 0 || radius < 0.0)
        throw std::invalid_argument("sample_disk: negative radius or count");
    if (std::abs(center[0] + center[1] + center[2] - 1.0) > 1e-12)
        throw std::invalid_argument("sample_disk: center must lie on the simplex");
    for (const Vec3* v : {&basis1, &basis2})
        if (std::abs((*v)[0] + (*v)[1] + (*v)[2]) > 1e-12)
            throw std::invalid_argument("sample_disk: basis must lie in the simplex plane");
    // The disk stays inside the simplex iff every coordinate clears the
    // largest in-plane excursion of that coordinate.
    for (int c = 0; c < 3; ++c) {
        const double amp = std::hypot(basis1[c], basis2[c]);
        if (center[c] - radius * amp < 0.0)
            throw std::invalid_argument("sample_disk: disk leaves the simplex at coordinate " +
                                        std::to_string(c + 1));
    }
    Rng rng(seed);
    std::vector<Vec3> pts(static_cast<std::size_t>(count));
    for (auto& p : pts) {
        const double rho = radius * std::sqrt(rng.uniform());
        const double th = 2.0 * std::numbers::pi * rng.uniform();
        const double a = rho * std::cos(th), bb = rho * std::sin(th);
        for (int c = 0; c < 3; ++c)
            p[c] = center[c] + a * basis1[c] + bb * basis2[c];
    }
    return pts;
}

double mape(std::span<const double> estimate, std::span<const double> reference) {
    if (estimate.size() != reference.size() || estimate.empty())
        throw std::invalid_argument("mape: size mismatch or empty input");
    double acc = 0.0;
    for (std::size_t i = 0; i < estimate.size(); ++i) {
        if (reference[i] == 0.0)
            throw std::domain_error("mape: zero reference value at index " + std::to_string(i));
        acc += std::abs(estimate[i] - reference[i]) / std::abs(reference[i]);
    }
    return 100.0 * acc / static_cast<double>(estimate.size());
}

OcpTrainResult train_ocp(OcpMode mode, int n_subnets, const std::vector<Vec3>& u0_batch,
                         const OcpConfig& cfg, const AdamConfig& adam, const TrainConfig& tcfg,
                         std::uint64_t seed, double bias_sigma, Exec exec) {
    OcpTrainResult res;
    res.nets = make_ocp_nets(mode, n_subnets, seed, bias_sigma);
    std::vector<double> params(res.nets.param_count());
    res.nets.pack(params);
    OcpNets& nets = res.nets;
    const LossGradFn fn = [&](std::span<const double> p, std::span<double> grad) {
        nets.unpack(p);
        PenaltyLoss pl = penalty_loss(nets, u0_batch, cfg, exec);
        std::copy(pl.grad.begin(), pl.grad.end(), grad.begin());
        return pl.loss;
    };
    res.report = train(params, fn, adam, tcfg);
    nets.unpack(params);
    return res;
}

} // namespace flm
