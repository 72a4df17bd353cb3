#pragma once

#include <array>
#include <span>
#include <vector>

#include "flm/model.hpp"
#include "flm/sign_matrix.hpp"

namespace flm {

/// Separable product-basis block for one frequency vector: coefficient a_k
/// multiplies prod_j phi_{n_j}(x_j), where phi is sin for coordinates in I_k
/// and cos otherwise (see index_set). coeff[k-1] stores a_k.
struct SeparableBlock {
    std::vector<double> freq;  // m
    std::vector<double> coeff; // 2^m
};

/// Two-dimensional closed form: the pair of phase-shifted cosines
/// A1 cos(n1 x1 + n2 x2 - p1) + A2 cos(n1 x1 - n2 x2 - p2) expands into
/// {a1 cc, a2 cs, a3 sc, a4 ss} with
///   a1 =  A1 cos p1 + A2 cos p2      a2 = A1 sin p1 - A2 sin p2
///   a3 =  A1 sin p1 + A2 sin p2      a4 = -A1 cos p1 + A2 cos p2
std::array<double, 4> to_separable_2d(double a1, double a2, double p1, double p2);

/// General expansion of one sub-network into its 2^m separable coefficients.
SeparableBlock to_separable(const SubNetwork& sn, const SignMatrix& sign);

double eval_separable(const SeparableBlock& block, std::span<const double> x);

/// Expansion of a whole model; block s corresponds to sub-network s.
std::vector<SeparableBlock> to_separable(const FlmModel& model);

} // namespace flm
