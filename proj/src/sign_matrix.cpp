#include "flm/sign_matrix.hpp"

#include <bit>
#include <stdexcept>
#include <string>

namespace flm {

SignMatrix SignMatrix::build(int m) {
    if (m < 1)
        throw std::invalid_argument("sign_matrix: dimension must be >= 1, got " + std::to_string(m));
    if (m > 20)
        throw std::invalid_argument("sign_matrix: dimension " + std::to_string(m) +
                                    " exceeds the supported cap of 20");
    SignMatrix s;
    s.m_ = m;
    s.l_ = 1 << (m - 1);
    s.data_.resize(static_cast<std::size_t>(s.l_) * m);
    for (int i = 0; i < s.l_; ++i) {
        std::int8_t* r = s.data_.data() + static_cast<std::size_t>(i) * m;
        r[0] = 1;
        // Remaining entries follow the binary expansion of i, most significant
        // bit first, with 0 -> +1 and 1 -> -1: exactly lexicographic order.
        for (int j = 1; j < m; ++j)
            r[j] = ((i >> (m - 1 - j)) & 1) ? -1 : 1;
    }
    return s;
}

SignMatrix sign_matrix(int m) { return SignMatrix::build(m); }

int BasisIndex::sine_count() const { return std::popcount(sine_mask); }

BasisIndex index_set(int k, int m) {
    if (m < 1 || m > 20)
        throw std::invalid_argument("index_set: dimension out of range: " + std::to_string(m));
    if (k < 1 || k > (1 << m))
        throw std::invalid_argument("index_set: k must be in [1, 2^m], got " + std::to_string(k));
    BasisIndex b;
    b.k = k;
    b.m = m;
    const unsigned bits = static_cast<unsigned>(k - 1);
    for (int j = 1; j <= m; ++j)
        if ((bits >> (m - j)) & 1u)
            b.sine_mask |= 1u << (j - 1);
    return b;
}

int sign_factor(const SignMatrix& s, int i, int k) {
    if (i < 1 || i > s.rows())
        throw std::invalid_argument("sign_factor: row index out of range: " + std::to_string(i));
    const BasisIndex b = index_set(k, s.dim());
    int prod = 1;
    for (int j = 1; j <= s.dim(); ++j)
        if (b.is_sine(j))
            prod *= s.entry(i - 1, j - 1);
    return prod;
}

} // namespace flm
