#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace flm {

/// Sign pattern table shared by the hidden units of one sub-network:
/// 2^(m-1) rows of {+1,-1}^m, every row starting with +1, ordered
/// lexicographically with +1 before -1. Row i carries the input-weight signs
/// of hidden unit i (rows are 0-based internally).
class SignMatrix {
public:
    SignMatrix() = default;

    /// m must be in [1, 20]; the row count doubles with every dimension.
    static SignMatrix build(int m);

    int dim() const { return m_; }
    int rows() const { return l_; }

    std::span<const std::int8_t> row(int i) const {
        return {data_.data() + static_cast<std::size_t>(i) * m_, static_cast<std::size_t>(m_)};
    }

    int entry(int i, int j) const { return data_[static_cast<std::size_t>(i) * m_ + j]; }

private:
    int m_ = 0;
    int l_ = 0;
    std::vector<std::int8_t> data_;
};

/// Same as SignMatrix::build.
SignMatrix sign_matrix(int m);

/// Basis label k in 1..2^m together with the coordinate set I_k that carries
/// sine factors: coordinate j (1-based) is in I_k iff bit (m-j) of k-1 is set,
/// i.e. the m-bit binary expansion of k-1 read left to right.
struct BasisIndex {
    int k = 1;
    int m = 0;
    std::uint32_t sine_mask = 0; // bit (j-1) set <=> coordinate j in I_k

    bool is_sine(int j) const { return (sine_mask >> (j - 1)) & 1u; } // j is 1-based
    int sine_count() const;
};

BasisIndex index_set(int k, int m);

/// Product of the row-i sign entries over the coordinates in I_k.
/// Both i (row) and k (basis label) are 1-based here, matching the usual
/// indexing of the separable expansion.
int sign_factor(const SignMatrix& s, int i, int k);

} // namespace flm
