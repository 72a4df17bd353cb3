#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "flm/model.hpp"
#include "flm/parallel.hpp"

namespace flm {

/// Linear second-order residual at one point:
///   r = val*u + sum_j grad[j]*du/dx_j + sum_j hess[j]*d2u/dx_j^2 + constant.
struct ResidualCoeffs {
    double val = 0.0;
    std::array<double, 2> grad{0.0, 0.0};
    std::array<double, 2> hess{0.0, 0.0};
    double constant = 0.0;
};

/// A boundary face: coordinate `coord` pinned to `value`, the other
/// coordinate free over its domain interval.
struct BoundaryFace {
    int coord = 0;
    double value = 0.0;
};

/// Two-dimensional collocation problem. Coordinate 1 is time for the
/// evolution problems (heat, gbs); both coordinates are spatial for poisson.
struct PdeProblem {
    std::string name;
    std::array<std::array<double, 2>, 2> domain{}; // [coord][lo, hi]
    std::vector<BoundaryFace> faces;
    bool has_ic = false; // initial line at coordinate-1 == 0
    std::function<double(double, double)> exact;
    std::function<ResidualCoeffs(double, double)> residual_coeffs;
    std::function<double(double, double)> bc_value;
    std::function<double(double)> ic_value;

    double residual(const std::array<double, 2>& pt, const EvalBundle& b) const;
};

/// Problems: "heat", "poisson", "gbs". Unknown names raise ConfigError
/// listing the valid options.
PdeProblem make_problem(const std::string& name);

struct CollocationSet {
    std::vector<std::array<double, 2>> ic_pts;
    std::vector<std::array<double, 2>> bc_pts; // equal split across faces
    std::vector<std::array<double, 2>> pde_pts;
    std::uint64_t seed = 0;
};

/// Draws interior points strictly inside the domain (time in (0, T] for the
/// evolution problems), boundary points on the faces, and initial points on
/// the open initial line. Sampling order: ic, bc, pde from one stream.
CollocationSet sample_collocation(const PdeProblem& problem, int n_ic, int n_bc, int n_pde,
                                  std::uint64_t seed);

struct PdeLoss {
    double total = 0.0;
    double ic = 0.0;
    double bc = 0.0;
    double pde = 0.0;
    std::vector<double> grad;
};

/// Mean-squared collocation loss (ic + bc + pde terms) and its parameter
/// gradient. Points are processed in fixed 64-point blocks whose partial
/// sums combine in block order, so serial and parallel execution agree
/// bitwise.
PdeLoss pde_loss(const FlmModel& model, const PdeProblem& problem, const CollocationSet& colloc,
                 Exec exec = Exec::parallel);

struct ErrorMetrics {
    double mse = 0.0;
    double mae = 0.0;
    double max_err = 0.0;
};

/// Errors against the exact solution on an inclusive uniform grid_n x grid_n
/// grid over the closed domain.
ErrorMetrics evaluate_metrics(const FlmModel& model, const PdeProblem& problem, int grid_n);

} // namespace flm
