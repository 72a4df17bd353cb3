#pragma once

#include <functional>
#include <vector>

#include "flm/ocp.hpp"
#include "flm/replicator.hpp"

namespace flm {

/// Costate equations of the control problem. The minimizing control is
/// gamma = -(lambda . G(u)) / control_weight; the costate obeys
/// lambda' = -(u - target) - (J_F + gamma J_G)^T lambda with lambda(T) = 0.
struct PmpDerivatives {
    Vec3 du{};
    Vec3 dlambda{};
    double gamma = 0.0;
};

PmpDerivatives pmp_rhs(const Vec3& u, const Vec3& lambda, const OcpConfig& cfg);

/// Classic fixed-step RK4. Returns the full path, steps+1 rows of y.
/// Throws std::runtime_error if the state stops being finite.
using OdeRhs = std::function<void(double, const std::vector<double>&, std::vector<double>&)>;
std::vector<std::vector<double>> integrate_rk4(const OdeRhs& rhs, std::vector<double> y0,
                                               double t0, double t1, int steps);

struct ShootingOptions {
    int rk4_steps = 2000;
    double tol = 1e-8;       // terminal costate max-norm
    int max_iter = 50;
    double fd_step = 1e-7;   // Jacobian finite-difference step
};

struct PmpSolution {
    std::vector<double> t;
    std::vector<Vec3> u;
    std::vector<Vec3> lambda;
    std::vector<double> gamma;
    double j_star = 0.0;       // trapezoid of the running cost
    double residual_norm = 0.0; // |lambda(T)|_inf at the solution
    int newton_iters = 0;
};

/// Single shooting on lambda(0) with damped Newton (finite-difference
/// Jacobian), started from zero. Falls back to continuation in the horizon
/// if the direct solve stalls; raises ShootingError when both fail.
PmpSolution solve_bvp(const Vec3& u0, const OcpConfig& cfg, const ShootingOptions& opts = {});

} // namespace flm
