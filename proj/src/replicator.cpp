#include "flm/replicator.hpp"

#include <cmath>
#include <stdexcept>

namespace flm {

Mat3 rps_payoff() {
    return {{{0.0, -1.0, 1.0}, {1.0, 0.0, -1.0}, {-1.0, 1.0, 0.0}}};
}

Mat3 rps_actuation() {
    return {{{0.0, 0.0, 1.0}, {1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}}};
}

void replicator_raw(const Vec3& u, const Mat3& a, Vec3& out) {
    Vec3 au{};
    for (int i = 0; i < 3; ++i)
        au[i] = a[i][0] * u[0] + a[i][1] * u[1] + a[i][2] * u[2];
    const double q = u[0] * au[0] + u[1] * au[1] + u[2] * au[2];
    for (int i = 0; i < 3; ++i)
        out[i] = u[i] * (au[i] - q);
}

void replicator_jacobian(const Vec3& u, const Mat3& a, Mat3& out) {
    Vec3 au{}, atu{};
    for (int i = 0; i < 3; ++i) {
        au[i] = a[i][0] * u[0] + a[i][1] * u[1] + a[i][2] * u[2];
        atu[i] = a[0][i] * u[0] + a[1][i] * u[1] + a[2][i] * u[2];
    }
    const double q = u[0] * au[0] + u[1] * au[1] + u[2] * au[2];
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double d = u[i] * (a[i][j] - au[j] - atu[j]);
            if (i == j)
                d += au[i] - q;
            out[i][j] = d;
        }
}

bool on_simplex(const Vec3& u, double tol) {
    const double s = u[0] + u[1] + u[2];
    if (std::abs(s - 1.0) > tol)
        return false;
    for (double v : u)
        if (v < -tol || v > 1.0 + tol)
            return false;
    return true;
}

std::pair<Vec3, Vec3> replicator_fields(const Vec3& u, double tol) {
    if (!on_simplex(u, tol))
        throw std::domain_error("replicator_fields: input is off the 2-simplex");
    Vec3 f{}, g{};
    replicator_raw(u, rps_payoff(), f);
    replicator_raw(u, rps_actuation(), g);
    return {f, g};
}

Vec3 cyclic_perm(const Vec3& u) { return {u[1], u[2], u[0]}; }

Vec3 uniform_simplex_point(Rng& rng) {
    // Normalized exponentials give the flat Dirichlet distribution.
    double e0 = -std::log(1.0 - rng.uniform());
    double e1 = -std::log(1.0 - rng.uniform());
    double e2 = -std::log(1.0 - rng.uniform());
    const double s = e0 + e1 + e2;
    return {e0 / s, e1 / s, e2 / s};
}

} // namespace flm
