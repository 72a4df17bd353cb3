#include "flm/pmp.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "flm/errors.hpp"

namespace flm {

PmpDerivatives pmp_rhs(const Vec3& u, const Vec3& lambda, const OcpConfig& cfg) {
    PmpDerivatives d;
    Vec3 f{}, g{};
    replicator_raw(u, rps_payoff(), f);
    replicator_raw(u, rps_actuation(), g);
    const double lg = lambda[0] * g[0] + lambda[1] * g[1] + lambda[2] * g[2];
    d.gamma = -lg / cfg.control_weight;
    for (int i = 0; i < 3; ++i)
        d.du[i] = f[i] + d.gamma * g[i];
    Mat3 jf{}, jg{};
    replicator_jacobian(u, rps_payoff(), jf);
    replicator_jacobian(u, rps_actuation(), jg);
    for (int i = 0; i < 3; ++i) {
        double acc = -(u[i] - cfg.target[i]);
        for (int c = 0; c < 3; ++c)
            acc -= (jf[c][i] + d.gamma * jg[c][i]) * lambda[c];
        d.dlambda[i] = acc;
    }
    return d;
}

std::vector<std::vector<double>> integrate_rk4(const OdeRhs& rhs, std::vector<double> y0,
                                               double t0, double t1, int steps) {
    if (steps < 1)
        throw std::invalid_argument("integrate_rk4: steps must be >= 1");
    const std::size_t dim = y0.size();
    const double h = (t1 - t0) / static_cast<double>(steps);
    std::vector<std::vector<double>> path;
    path.reserve(static_cast<std::size_t>(steps) + 1);
    path.push_back(y0);
    std::vector<double> k1(dim), k2(dim), k3(dim), k4(dim), tmp(dim);
    std::vector<double> y = std::move(y0);
    for (int s = 0; s < steps; ++s) {
        const double t = t0 + h * static_cast<double>(s);
        rhs(t, y, k1);
        for (std::size_t i = 0; i < dim; ++i)
            tmp[i] = y[i] + 0.5 * h * k1[i];
        rhs(t + 0.5 * h, tmp, k2);
        for (std::size_t i = 0; i < dim; ++i)
            tmp[i] = y[i] + 0.5 * h * k2[i];
        rhs(t + 0.5 * h, tmp, k3);
        for (std::size_t i = 0; i < dim; ++i)
            tmp[i] = y[i] + h * k3[i];
        rhs(t + h, tmp, k4);
        for (std::size_t i = 0; i < dim; ++i)
            y[i] += (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        for (double v : y)
            if (!std::isfinite(v))
                throw std::runtime_error("integrate_rk4: state blew up near t = " +
                                         std::to_string(t + h));
        path.push_back(y);
    }
    return path;
}

namespace {

// Terminal costate of the Hamiltonian flow started at (u0, lambda0).
Vec3 shoot(const Vec3& u0, const Vec3& lambda0, const OcpConfig& cfg, double horizon, int steps) {
    double y[6] = {u0[0], u0[1], u0[2], lambda0[0], lambda0[1], lambda0[2]};
    const double h = horizon / static_cast<double>(steps);
    auto deriv = [&cfg](const double* in, double* out) {
        const Vec3 u{in[0], in[1], in[2]};
        const Vec3 lam{in[3], in[4], in[5]};
        const PmpDerivatives d = pmp_rhs(u, lam, cfg);
        out[0] = d.du[0];
        out[1] = d.du[1];
        out[2] = d.du[2];
        out[3] = d.dlambda[0];
        out[4] = d.dlambda[1];
        out[5] = d.dlambda[2];
    };
    double k1[6], k2[6], k3[6], k4[6], tmp[6];
    for (int s = 0; s < steps; ++s) {
        deriv(y, k1);
        for (int i = 0; i < 6; ++i)
            tmp[i] = y[i] + 0.5 * h * k1[i];
        deriv(tmp, k2);
        for (int i = 0; i < 6; ++i)
            tmp[i] = y[i] + 0.5 * h * k2[i];
        deriv(tmp, k3);
        for (int i = 0; i < 6; ++i)
            tmp[i] = y[i] + h * k3[i];
        deriv(tmp, k4);
        for (int i = 0; i < 6; ++i)
            y[i] += (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    return {y[3], y[4], y[5]};
}

double max_norm(const Vec3& v) {
    return std::max({std::abs(v[0]), std::abs(v[1]), std::abs(v[2])});
}

// Gaussian elimination with partial pivoting; returns false when singular.
bool solve3(Mat3 a, Vec3 rhs, Vec3& out) {
    int perm[3] = {0, 1, 2};
    for (int col = 0; col < 3; ++col) {
        int piv = col;
        for (int r = col + 1; r < 3; ++r)
            if (std::abs(a[perm[r]][col]) > std::abs(a[perm[piv]][col]))
                piv = r;
        std::swap(perm[col], perm[piv]);
        const double d = a[perm[col]][col];
        if (std::abs(d) < 1e-14)
            return false;
        for (int r = col + 1; r < 3; ++r) {
            const double f = a[perm[r]][col] / d;
            for (int c = col; c < 3; ++c)
                a[perm[r]][c] -= f * a[perm[col]][c];
            rhs[perm[r]] -= f * rhs[perm[col]];
        }
    }
    for (int r = 2; r >= 0; --r) {
        double acc = rhs[perm[r]];
        for (int c = r + 1; c < 3; ++c)
            acc -= a[perm[r]][c] * out[c];
        out[r] = acc / a[perm[r]][r];
    }
    return true;
}

struct NewtonResult {
    Vec3 lambda0{};
    double residual = 0.0;
    int iters = 0;
    bool ok = false;
};

NewtonResult newton_shoot(const Vec3& u0, Vec3 lambda0, const OcpConfig& cfg, double horizon,
                          const ShootingOptions& opts, int steps) {
    NewtonResult res;
    Vec3 r = shoot(u0, lambda0, cfg, horizon, steps);
    double rn = max_norm(r);
    for (int it = 0; it < opts.max_iter; ++it) {
        if (rn <= opts.tol) {
            res.lambda0 = lambda0;
            res.residual = rn;
            res.iters = it;
            res.ok = true;
            return res;
        }
        Mat3 jac{};
        for (int j = 0; j < 3; ++j) {
            Vec3 lp = lambda0;
            lp[j] += opts.fd_step;
            const Vec3 rp = shoot(u0, lp, cfg, horizon, steps);
            for (int i = 0; i < 3; ++i)
                jac[i][j] = (rp[i] - r[i]) / opts.fd_step;
        }
        Vec3 step{};
        if (!solve3(jac, {-r[0], -r[1], -r[2]}, step))
            break;
        double alpha = 1.0;
        bool accepted = false;
        while (alpha >= 1.0 / 4096.0) {
            const Vec3 cand{lambda0[0] + alpha * step[0], lambda0[1] + alpha * step[1],
                            lambda0[2] + alpha * step[2]};
            const Vec3 rc = shoot(u0, cand, cfg, horizon, steps);
            const double rcn = max_norm(rc);
            if (rcn < rn) {
                lambda0 = cand;
                r = rc;
                rn = rcn;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!accepted)
            break;
    }
    res.lambda0 = lambda0;
    res.residual = rn;
    res.iters = opts.max_iter;
    res.ok = rn <= opts.tol;
    return res;
}

} // namespace

PmpSolution solve_bvp(const Vec3& u0, const OcpConfig& cfg, const ShootingOptions& opts) {
    if (!on_simplex(u0, 1e-9))
        throw std::invalid_argument("solve_bvp: initial condition off the simplex");

    NewtonResult nr = newton_shoot(u0, Vec3{0.0, 0.0, 0.0}, cfg, cfg.horizon, opts, opts.rk4_steps);
    if (!nr.ok) {
        // Continuation: grow the horizon in unit steps, warm-starting lambda(0).
        Vec3 lambda0{0.0, 0.0, 0.0};
        bool fine = true;
        double t = 0.0;
        while (t < cfg.horizon && fine) {
            t = std::min(t + 1.0, cfg.horizon);
            const int steps =
                std::max(1, static_cast<int>(std::lround(opts.rk4_steps * t / cfg.horizon)));
            const NewtonResult stage = newton_shoot(u0, lambda0, cfg, t, opts, steps);
            fine = stage.ok;
            lambda0 = stage.lambda0;
            nr = stage;
        }
        if (!nr.ok)
            throw ShootingError("solve_bvp: shooting failed to converge; terminal residual " +
                                    std::to_string(nr.residual),
                                nr.residual);
    }

    // Final pass storing the path.
    const int steps = opts.rk4_steps;
    const OdeRhs rhs = [&cfg](double, const std::vector<double>& y, std::vector<double>& dy) {
        const PmpDerivatives d =
            pmp_rhs({y[0], y[1], y[2]}, {y[3], y[4], y[5]}, cfg);
        dy[0] = d.du[0];
        dy[1] = d.du[1];
        dy[2] = d.du[2];
        dy[3] = d.dlambda[0];
        dy[4] = d.dlambda[1];
        dy[5] = d.dlambda[2];
    };
    const auto path = integrate_rk4(
        rhs, {u0[0], u0[1], u0[2], nr.lambda0[0], nr.lambda0[1], nr.lambda0[2]}, 0.0, cfg.horizon,
        steps);

    PmpSolution sol;
    const std::size_t n = path.size();
    sol.t.resize(n);
    sol.u.resize(n);
    sol.lambda.resize(n);
    sol.gamma.resize(n);
    const double h = cfg.horizon / static_cast<double>(steps);
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        sol.t[k] = h * static_cast<double>(k);
        sol.u[k] = {path[k][0], path[k][1], path[k][2]};
        sol.lambda[k] = {path[k][3], path[k][4], path[k][5]};
        const PmpDerivatives d = pmp_rhs(sol.u[k], sol.lambda[k], cfg);
        sol.gamma[k] = d.gamma;
        double track = 0.0;
        for (int c = 0; c < 3; ++c)
            track += (sol.u[k][c] - cfg.target[c]) * (sol.u[k][c] - cfg.target[c]);
        const double f = 0.5 * track + 0.5 * cfg.control_weight * sol.gamma[k] * sol.gamma[k];
        acc += (k == 0 || k + 1 == n) ? 0.5 * f : f;
    }
    sol.j_star = acc * h;
    sol.residual_norm = max_norm(sol.lambda.back());
    sol.newton_iters = nr.iters;
    return sol;
}

} // namespace flm
