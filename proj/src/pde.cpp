#include "flm/pde.hpp"

#include <cmath>
#include <numbers>

#include "flm/errors.hpp"
#include "flm/rng.hpp"

namespace flm {

namespace {
constexpr double kPi = std::numbers::pi;
}

double PdeProblem::residual(const std::array<double, 2>& pt, const EvalBundle& b) const {
    const ResidualCoeffs c = residual_coeffs(pt[0], pt[1]);
    double r = c.val * b.value + c.constant;
    for (int j = 0; j < 2; ++j) {
        if (c.grad[j] != 0.0)
            r += c.grad[j] * b.grad_x[j];
        if (c.hess[j] != 0.0)
            r += c.hess[j] * b.diag_hess_x[j];
    }
    return r;
}

PdeProblem make_problem(const std::string& name) {
    PdeProblem p;
    p.name = name;
    if (name == "heat") {
        // u_t = 0.1 u_xx on (0,1) x (0,1], u(x,0)=sin(pi x), u(0,t)=u(1,t)=0.
        p.domain = {{{0.0, 1.0}, {0.0, 1.0}}};
        p.faces = {{0, 0.0}, {0, 1.0}};
        p.has_ic = true;
        p.exact = [](double x, double t) {
            return std::sin(kPi * x) * std::exp(-0.1 * kPi * kPi * t);
        };
        p.residual_coeffs = [](double, double) {
            ResidualCoeffs c;
            c.grad = {0.0, 1.0};
            c.hess = {-0.1, 0.0};
            return c;
        };
        p.bc_value = [](double, double) { return 0.0; };
        p.ic_value = [](double x) { return std::sin(kPi * x); };
    } else if (name == "poisson") {
        // u_xx + u_yy = -2 pi^2 sin(pi x) sin(pi y) on (0,1)^2, zero boundary.
        p.domain = {{{0.0, 1.0}, {0.0, 1.0}}};
        p.faces = {{0, 0.0}, {0, 1.0}, {1, 0.0}, {1, 1.0}};
        p.has_ic = false;
        p.exact = [](double x, double y) { return std::sin(kPi * x) * std::sin(kPi * y); };
        p.residual_coeffs = [](double x, double y) {
            ResidualCoeffs c;
            c.hess = {1.0, 1.0};
            c.constant = 2.0 * kPi * kPi * std::sin(kPi * x) * std::sin(kPi * y);
            return c;
        };
        p.bc_value = [](double, double) { return 0.0; };
    } else if (name == "gbs") {
        // u_t = a u_xx + b u_x + c u + d on (-2,2) x (0,1], exact u = e^(x-t).
        p.domain = {{{-2.0, 2.0}, {0.0, 1.0}}};
        p.faces = {{0, -2.0}, {0, 2.0}};
        p.has_ic = true;
        p.exact = [](double x, double t) { return std::exp(x - t); };
        p.residual_coeffs = [](double x, double t) {
            const double ex = std::exp(x);
            const double s = 2.0 + (1.0 - t) * std::sin(ex);
            const double a = 0.08 * s * s;
            const double b = 0.06 * (1.0 + t * std::exp(-ex)) - 0.02 * std::exp(-t - ex) - a;
            const double c = -0.06 * (1.0 + t * std::exp(-ex));
            const double d = 0.02 * std::exp(x - ex - 2.0 * t) - std::exp(x - t);
            ResidualCoeffs rc;
            rc.val = -c;
            rc.grad = {-b, 1.0};
            rc.hess = {-a, 0.0};
            rc.constant = -d;
            return rc;
        };
        p.bc_value = [](double x, double t) { return std::exp(x - t); };
        p.ic_value = [](double x) { return std::exp(x); };
    } else {
        throw ConfigError("unknown problem '" + name + "'; expected heat, poisson or gbs");
    }
    return p;
}

namespace {

double open_unit(Rng& rng) {
    double u = rng.uniform();
    while (u == 0.0)
        u = rng.uniform();
    return u;
}

} // namespace

CollocationSet sample_collocation(const PdeProblem& problem, int n_ic, int n_bc, int n_pde,
                                  std::uint64_t seed) {
    if (n_pde < 1 || n_bc < 0 || n_ic < 0)
        throw ConfigError("sample_collocation: counts must be nonnegative (n_pde >= 1)");
    if (n_ic > 0 && !problem.has_ic)
        throw ConfigError("sample_collocation: problem '" + problem.name +
                          "' has no initial condition");
    CollocationSet set;
    set.seed = seed;
    Rng rng(seed);
    const auto& dom = problem.domain;

    set.ic_pts.reserve(static_cast<std::size_t>(n_ic));
    for (int i = 0; i < n_ic; ++i) {
        const double x = dom[0][0] + (dom[0][1] - dom[0][0]) * open_unit(rng);
        set.ic_pts.push_back({x, 0.0});
    }

    const int nfaces = static_cast<int>(problem.faces.size());
    set.bc_pts.reserve(static_cast<std::size_t>(n_bc));
    for (int f = 0; f < nfaces; ++f) {
        const int count = n_bc / nfaces + (f < n_bc % nfaces ? 1 : 0);
        const BoundaryFace& face = problem.faces[static_cast<std::size_t>(f)];
        const int free_coord = 1 - face.coord;
        for (int i = 0; i < count; ++i) {
            const double v =
                dom[free_coord][0] + (dom[free_coord][1] - dom[free_coord][0]) * rng.uniform();
            std::array<double, 2> pt{};
            pt[face.coord] = face.value;
            pt[free_coord] = v;
            set.bc_pts.push_back(pt);
        }
    }

    set.pde_pts.reserve(static_cast<std::size_t>(n_pde));
    for (int i = 0; i < n_pde; ++i) {
        const double x = dom[0][0] + (dom[0][1] - dom[0][0]) * open_unit(rng);
        // Time-like second coordinate lives in (0, T]; poisson is open-open.
        double y;
        if (problem.has_ic)
            y = dom[1][1] * (1.0 - rng.uniform());
        else
            y = dom[1][0] + (dom[1][1] - dom[1][0]) * open_unit(rng);
        set.pde_pts.push_back({x, y});
    }
    return set;
}

namespace {

struct LossPartial {
    double sq = 0.0;
    std::vector<double> grad;
};

enum class SetKind { ic, bc, interior };

void accumulate_set(const FlmModel& model, const PdeProblem& problem,
                    const std::vector<std::array<double, 2>>& pts, SetKind kind, Exec exec,
                    double& sq_out, std::vector<double>& grad_out) {
    const std::size_t P = model.param_count();
    std::vector<LossPartial> partials;
    for_blocks(
        pts.size(), 64, partials,
        [&](std::size_t lo, std::size_t hi, LossPartial& part) {
            part.sq = 0.0;
            part.grad.assign(P, 0.0);
            EvalBundle b;
            for (std::size_t i = lo; i < hi; ++i) {
                const auto& pt = pts[i];
                if (kind == SetKind::interior) {
                    eval_bundle(model, pt, 2, b);
                    const ResidualCoeffs c = problem.residual_coeffs(pt[0], pt[1]);
                    double r = c.val * b.value + c.constant;
                    for (int j = 0; j < 2; ++j) {
                        if (c.grad[j] != 0.0)
                            r += c.grad[j] * b.grad_x[j];
                        if (c.hess[j] != 0.0)
                            r += c.hess[j] * b.diag_hess_x[j];
                    }
                    part.sq += r * r;
                    if (c.val != 0.0)
                        for (std::size_t p = 0; p < P; ++p)
                            part.grad[p] += r * c.val * b.value_pg[p];
                    for (int j = 0; j < 2; ++j) {
                        if (c.grad[j] != 0.0) {
                            const double* pg = b.grad_pg.data() + static_cast<std::size_t>(j) * P;
                            for (std::size_t p = 0; p < P; ++p)
                                part.grad[p] += r * c.grad[j] * pg[p];
                        }
                        if (c.hess[j] != 0.0) {
                            const double* pg = b.hess_pg.data() + static_cast<std::size_t>(j) * P;
                            for (std::size_t p = 0; p < P; ++p)
                                part.grad[p] += r * c.hess[j] * pg[p];
                        }
                    }
                } else {
                    eval_bundle(model, pt, 0, b);
                    const double target = kind == SetKind::ic ? problem.ic_value(pt[0])
                                                              : problem.bc_value(pt[0], pt[1]);
                    const double r = b.value - target;
                    part.sq += r * r;
                    for (std::size_t p = 0; p < P; ++p)
                        part.grad[p] += r * b.value_pg[p];
                }
            }
        },
        exec);

    double sq = 0.0;
    std::vector<double> grad(P, 0.0);
    for (const auto& part : partials) {
        sq += part.sq;
        for (std::size_t p = 0; p < P; ++p)
            grad[p] += part.grad[p];
    }
    const double inv = 1.0 / static_cast<double>(pts.size());
    sq_out = sq * inv;
    for (std::size_t p = 0; p < P; ++p)
        grad_out[p] += 2.0 * inv * grad[p];
}

} // namespace

PdeLoss pde_loss(const FlmModel& model, const PdeProblem& problem, const CollocationSet& colloc,
                 Exec exec) {
    PdeLoss out;
    out.grad.assign(model.param_count(), 0.0);
    if (!colloc.ic_pts.empty())
        accumulate_set(model, problem, colloc.ic_pts, SetKind::ic, exec, out.ic, out.grad);
    if (!colloc.bc_pts.empty())
        accumulate_set(model, problem, colloc.bc_pts, SetKind::bc, exec, out.bc, out.grad);
    if (!colloc.pde_pts.empty())
        accumulate_set(model, problem, colloc.pde_pts, SetKind::interior, exec, out.pde, out.grad);
    out.total = out.ic + out.bc + out.pde;
    return out;
}

ErrorMetrics evaluate_metrics(const FlmModel& model, const PdeProblem& problem, int grid_n) {
    if (grid_n < 2)
        throw ConfigError("evaluate_metrics: grid_n must be >= 2");
    ErrorMetrics m;
    double sq = 0.0, abs_sum = 0.0, mx = 0.0;
    const auto& dom = problem.domain;
    for (int i = 0; i < grid_n; ++i) {
        const double x = dom[0][0] + (dom[0][1] - dom[0][0]) * i / (grid_n - 1);
        for (int j = 0; j < grid_n; ++j) {
            const double y = dom[1][0] + (dom[1][1] - dom[1][0]) * j / (grid_n - 1);
            const std::array<double, 2> pt{x, y};
            const double err = eval(model, pt) - problem.exact(x, y);
            sq += err * err;
            abs_sum += std::abs(err);
            mx = std::max(mx, std::abs(err));
        }
    }
    const double count = static_cast<double>(grid_n) * grid_n;
    m.mse = sq / count;
    m.mae = abs_sum / count;
    m.max_err = mx;
    return m;
}

} // namespace flm
