#pragma once

#include <array>
#include <utility>

#include "flm/rng.hpp"

namespace flm {

using Vec3 = std::array<double, 3>;
using Mat3 = std::array<std::array<double, 3>, 3>;

/// Rock-paper-scissors payoff matrix (zero-sum cyclic game).
Mat3 rps_payoff();
/// Cyclic actuation matrix steering the controlled replicator flow.
Mat3 rps_actuation();

/// Replicator-type field for a payoff matrix A, defined on all of R^3:
/// out_i = u_i ((A u)_i - u . A u).
void replicator_raw(const Vec3& u, const Mat3& a, Vec3& out);
/// Full Jacobian of replicator_raw at u.
void replicator_jacobian(const Vec3& u, const Mat3& a, Mat3& out);

bool on_simplex(const Vec3& u, double tol = 1e-9);

/// Natural and actuation fields (F, G) of the RPS game at a simplex point.
/// Raises std::domain_error if u is off the simplex beyond tol.
std::pair<Vec3, Vec3> replicator_fields(const Vec3& u, double tol = 1e-9);

/// (u1, u2, u3) -> (u2, u3, u1).
Vec3 cyclic_perm(const Vec3& u);

/// Uniform draw from the 2-simplex.
Vec3 uniform_simplex_point(Rng& rng);

} // namespace flm
