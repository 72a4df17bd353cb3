#include "flm/fourier_xlate.hpp"

#include <cmath>
#include <stdexcept>

namespace flm {

std::array<double, 4> to_separable_2d(double a1, double a2, double p1, double p2) {
    const double c1 = std::cos(p1), s1 = std::sin(p1);
    const double c2 = std::cos(p2), s2 = std::sin(p2);
    return {a1 * c1 + a2 * c2, a1 * s1 - a2 * s2, a1 * s1 + a2 * s2, -a1 * c1 + a2 * c2};
}

SeparableBlock to_separable(const SubNetwork& sn, const SignMatrix& sign) {
    const int m = sign.dim();
    const int l = sign.rows();
    if (static_cast<int>(sn.freq.size()) != m || static_cast<int>(sn.amp.size()) != l ||
        static_cast<int>(sn.bias.size()) != l)
        throw std::invalid_argument("to_separable: sub-network does not match the sign matrix");

    SeparableBlock block;
    block.freq = sn.freq;
    block.coeff.assign(static_cast<std::size_t>(1) << m, 0.0);

    // cos(phi - b) expanded over the product basis picks up cos b, sin b,
    // -cos b, -sin b depending on |I_k| mod 4, weighted by the row sign
    // product over I_k.
    for (int i = 0; i < l; ++i) {
        const double a = sn.amp[i];
        const double cb = std::cos(sn.bias[i]);
        const double sb = std::sin(sn.bias[i]);
        for (int k = 1; k <= (1 << m); ++k) {
            const BasisIndex bi = index_set(k, m);
            int sgn = 1;
            for (int j = 1; j <= m; ++j)
                if (bi.is_sine(j))
                    sgn *= sign.entry(i, j - 1);
            double factor;
            switch (bi.sine_count() & 3) {
            case 0: factor = cb; break;
            case 1: factor = sb; break;
            case 2: factor = -cb; break;
            default: factor = -sb; break;
            }
            block.coeff[static_cast<std::size_t>(k - 1)] += a * sgn * factor;
        }
    }
    return block;
}

double eval_separable(const SeparableBlock& block, std::span<const double> x) {
    const int m = static_cast<int>(block.freq.size());
    if (static_cast<int>(x.size()) != m)
        throw std::invalid_argument("eval_separable: input dimension mismatch");
    std::vector<double> cs(static_cast<std::size_t>(m)), sn(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j) {
        cs[j] = std::cos(block.freq[j] * x[j]);
        sn[j] = std::sin(block.freq[j] * x[j]);
    }
    double total = 0.0;
    for (int k = 1; k <= (1 << m); ++k) {
        const BasisIndex bi = index_set(k, m);
        double term = block.coeff[static_cast<std::size_t>(k - 1)];
        for (int j = 1; j <= m; ++j)
            term *= bi.is_sine(j) ? sn[j - 1] : cs[j - 1];
        total += term;
    }
    return total;
}

std::vector<SeparableBlock> to_separable(const FlmModel& model) {
    std::vector<SeparableBlock> blocks;
    blocks.reserve(model.subnets.size());
    for (const auto& sn : model.subnets)
        blocks.push_back(to_separable(sn, model.sign));
    return blocks;
}

} // namespace flm
