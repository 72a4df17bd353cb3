#include "flm/model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "flm/rng.hpp"

namespace flm {

FlmModel::FlmModel(int dim, int n_subnets) {
    if (n_subnets < 1)
        throw std::invalid_argument("FlmModel: need at least one sub-network");
    m = dim;
    sign = SignMatrix::build(dim);
    const int l = sign.rows();
    subnets.assign(static_cast<std::size_t>(n_subnets), SubNetwork{});
    for (auto& sn : subnets) {
        sn.freq.assign(static_cast<std::size_t>(m), 0.0);
        sn.amp.assign(static_cast<std::size_t>(l), 0.0);
        sn.bias.assign(static_cast<std::size_t>(l), 0.0);
    }
}

void FlmModel::pack(std::span<double> out) const {
    if (out.size() != param_count())
        throw std::invalid_argument("pack: destination size mismatch");
    std::size_t p = 0;
    for (const auto& sn : subnets) {
        for (double v : sn.freq)
            out[p++] = v;
        for (double v : sn.amp)
            out[p++] = v;
        for (double v : sn.bias)
            out[p++] = v;
    }
}

void FlmModel::unpack(std::span<const double> in) {
    if (in.size() != param_count())
        throw std::invalid_argument("unpack: source size mismatch");
    std::size_t p = 0;
    for (auto& sn : subnets) {
        for (double& v : sn.freq)
            v = in[p++];
        for (double& v : sn.amp)
            v = in[p++];
        for (double& v : sn.bias)
            v = in[p++];
    }
}

std::vector<std::vector<double>> lattice_frequencies(int m, int count) {
    if (m < 1 || m > 20)
        throw std::invalid_argument("lattice_frequencies: dimension out of range");
    if (count < 1)
        throw std::invalid_argument("lattice_frequencies: count must be positive");
    std::vector<std::vector<double>> pts;
    pts.reserve(static_cast<std::size_t>(count));
    std::vector<int> idx(static_cast<std::size_t>(m), 0);
    for (int shell = 0; static_cast<int>(pts.size()) < count; ++shell) {
        // Walk the cube {0..shell}^m in lexicographic order, keep the new shell.
        idx.assign(static_cast<std::size_t>(m), 0);
        while (true) {
            int mx = 0;
            for (int v : idx)
                mx = std::max(mx, v);
            if (mx == shell) {
                pts.emplace_back(idx.begin(), idx.end());
                if (static_cast<int>(pts.size()) == count)
                    return pts;
            }
            int j = m - 1;
            while (j >= 0 && idx[j] == shell)
                idx[j--] = 0;
            if (j < 0)
                break;
            ++idx[j];
        }
    }
    return pts;
}

FlmModel init_model(int m, int n_subnets, std::uint64_t seed, double bias_sigma) {
    FlmModel model(m, n_subnets);
    const auto freqs = lattice_frequencies(m, n_subnets);
    Rng rng(seed);
    for (int s = 0; s < n_subnets; ++s) {
        model.subnets[s].freq = freqs[s];
        for (double& b : model.subnets[s].bias)
            b = rng.normal(0.0, bias_sigma);
    }
    return model;
}

double eval(const FlmModel& model, std::span<const double> x) {
    if (static_cast<int>(x.size()) != model.m)
        throw std::invalid_argument("eval: input dimension mismatch");
    const int m = model.m;
    const int l = model.units_per_subnet();
    double total = 0.0;
    for (const auto& sn : model.subnets) {
        for (int i = 0; i < l; ++i) {
            double phi = -sn.bias[i];
            const auto row = model.sign.row(i);
            for (int j = 0; j < m; ++j)
                phi += row[j] * sn.freq[j] * x[j];
            total += sn.amp[i] * std::cos(phi);
        }
    }
    return total;
}

void eval_bundle(const FlmModel& model, std::span<const double> x, int order, EvalBundle& out) {
    if (static_cast<int>(x.size()) != model.m)
        throw std::invalid_argument("eval_bundle: input dimension mismatch");
    if (order < 0 || order > 2)
        throw std::invalid_argument("eval_bundle: order must be 0, 1 or 2");
    const int m = model.m;
    const int l = model.units_per_subnet();
    const int n = model.subnet_count();
    const std::size_t P = model.param_count();
    const std::size_t per = model.params_per_subnet();

    out.order = order;
    out.value = 0.0;
    out.value_pg.assign(P, 0.0);
    if (order >= 1) {
        out.grad_x.assign(static_cast<std::size_t>(m), 0.0);
        out.grad_pg.assign(static_cast<std::size_t>(m) * P, 0.0);
    } else {
        out.grad_x.clear();
        out.grad_pg.clear();
    }
    if (order >= 2) {
        out.diag_hess_x.assign(static_cast<std::size_t>(m), 0.0);
        out.hess_pg.assign(static_cast<std::size_t>(m) * P, 0.0);
    } else {
        out.diag_hess_x.clear();
        out.hess_pg.clear();
    }

    std::vector<double> w(static_cast<std::size_t>(m));
    for (int s = 0; s < n; ++s) {
        const auto& sn = model.subnets[s];
        const std::size_t off = static_cast<std::size_t>(s) * per;
        const std::size_t amp_off = off + static_cast<std::size_t>(m);
        const std::size_t bias_off = amp_off + static_cast<std::size_t>(l);
        for (int i = 0; i < l; ++i) {
            const auto row = model.sign.row(i);
            double phi = -sn.bias[i];
            for (int j = 0; j < m; ++j) {
                w[j] = row[j] * sn.freq[j];
                phi += w[j] * x[j];
            }
            const double c = std::cos(phi);
            const double si = std::sin(phi);
            const double a = sn.amp[i];

            out.value += a * c;
            out.value_pg[amp_off + i] = c;
            out.value_pg[bias_off + i] = a * si;
            for (int q = 0; q < m; ++q)
                out.value_pg[off + q] += -a * si * row[q] * x[q];

            if (order < 1)
                continue;
            for (int j = 0; j < m; ++j) {
                out.grad_x[j] += -a * w[j] * si;
                double* pg = out.grad_pg.data() + static_cast<std::size_t>(j) * P;
                pg[amp_off + i] = -w[j] * si;
                pg[bias_off + i] = a * w[j] * c;
                for (int q = 0; q < m; ++q) {
                    double d = w[j] * c * row[q] * x[q];
                    if (j == q)
                        d += row[j] * si;
                    pg[off + q] += -a * d;
                }
            }
            if (order < 2)
                continue;
            for (int j = 0; j < m; ++j) {
                const double w2 = w[j] * w[j];
                out.diag_hess_x[j] += -a * w2 * c;
                double* pg = out.hess_pg.data() + static_cast<std::size_t>(j) * P;
                pg[amp_off + i] = -w2 * c;
                pg[bias_off + i] = -a * w2 * si;
                for (int q = 0; q < m; ++q) {
                    double d = -w2 * si * row[q] * x[q];
                    if (j == q)
                        d += 2.0 * w[j] * row[j] * c;
                    pg[off + q] += -a * d;
                }
            }
        }
    }
}

} // namespace flm
