#pragma once

#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "flm/sign_matrix.hpp"

namespace flm {

/// One sub-network: a trainable frequency vector shared (up to sign flips)
/// by its 2^(m-1) cosine units, plus per-unit output weights and phase
/// biases. Unit i computes amp[i] * cos(sum_j sign(i,j) freq[j] x_j - bias[i]).
struct SubNetwork {
    std::vector<double> freq; // m entries
    std::vector<double> amp;  // l = 2^(m-1) entries
    std::vector<double> bias; // l entries, radians
};

/// Sum of N sub-networks on a common input dimension. The flat parameter
/// layout is subnet-major: per subnet [freq(m), amp(l), bias(l)].
struct FlmModel {
    int m = 0;
    SignMatrix sign;
    std::vector<SubNetwork> subnets;

    FlmModel() = default;
    FlmModel(int dim, int n_subnets);

    int input_dim() const { return m; }
    int subnet_count() const { return static_cast<int>(subnets.size()); }
    int units_per_subnet() const { return sign.rows(); }
    std::size_t params_per_subnet() const {
        return static_cast<std::size_t>(m) + 2u * static_cast<std::size_t>(sign.rows());
    }
    std::size_t param_count() const { return subnets.size() * params_per_subnet(); }

    void pack(std::span<double> out) const;
    void unpack(std::span<const double> in);
};

/// First `count` points of the nonneg integer lattice N_0^m, enumerated by
/// growing max-coordinate shell and lexicographically inside each shell:
/// m=2 gives (0,0),(0,1),(1,0),(1,1),(0,2),... so any count of K^m fills the
/// full grid {0..K-1}^m.
std::vector<std::vector<double>> lattice_frequencies(int m, int count);

/// Fresh model: frequencies on the lattice above, amplitudes zero, biases
/// drawn i.i.d. normal with the given sigma.
FlmModel init_model(int m, int n_subnets, std::uint64_t seed,
                    double bias_sigma = std::numbers::pi / 3.0);

double eval(const FlmModel& model, std::span<const double> x);

/// Closed-form evaluation bundle at one input point.
///   order 0: value and d(value)/d(params)
///   order 1: + input gradient and its parameter gradients
///   order 2: + diagonal input Hessian and its parameter gradients
/// Parameter-gradient rows use the flat layout of FlmModel::pack; grad_pg and
/// hess_pg store row j at [j*P, (j+1)*P).
struct EvalBundle {
    int order = 2;
    double value = 0.0;
    std::vector<double> grad_x;      // m
    std::vector<double> diag_hess_x; // m
    std::vector<double> value_pg;    // P
    std::vector<double> grad_pg;     // m * P
    std::vector<double> hess_pg;     // m * P
};

void eval_bundle(const FlmModel& model, std::span<const double> x, int order, EvalBundle& out);

/// JSON checkpoint round trip. Doubles survive bit-exactly.
void save_model(const FlmModel& model, const std::string& path);
FlmModel load_model(const std::string& path);

} // namespace flm
