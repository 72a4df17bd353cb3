#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "flm/fourier_xlate.hpp"
#include "flm/model.hpp"
#include "flm/rng.hpp"
#include "flm/sign_matrix.hpp"
#include "test_util.hpp"

using flm::FlmModel;
using flm::Rng;
using flm::SeparableBlock;
using flm::SubNetwork;

TEST_CASE("2-d closed form") {
    SUBCASE("frozen case: a single unshifted unit") {
        const auto a = flm::to_separable_2d(1.0, 0.0, 0.0, 0.0);
        CHECK(a[0] == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(a[1] == doctest::Approx(0.0).epsilon(1e-15));
        CHECK(a[2] == doctest::Approx(0.0).epsilon(1e-15));
        CHECK(a[3] == doctest::Approx(-1.0).epsilon(1e-15));
    }
    SUBCASE("random pairs reproduce the function pointwise") {
        Rng rng(11);
        for (int rep = 0; rep < 50; ++rep) {
            const double a1 = rng.uniform(-2, 2), a2 = rng.uniform(-2, 2);
            const double p1 = rng.uniform(-3, 3), p2 = rng.uniform(-3, 3);
            const double n1 = rng.uniform(-4, 4), n2 = rng.uniform(-4, 4);
            const auto a = flm::to_separable_2d(a1, a2, p1, p2);
            for (int pt = 0; pt < 20; ++pt) {
                const double x1 = rng.uniform(-3, 3), x2 = rng.uniform(-3, 3);
                const double direct = a1 * std::cos(n1 * x1 + n2 * x2 - p1) +
                                      a2 * std::cos(n1 * x1 - n2 * x2 - p2);
                const double sep = a[0] * std::cos(n1 * x1) * std::cos(n2 * x2) +
                                   a[1] * std::cos(n1 * x1) * std::sin(n2 * x2) +
                                   a[2] * std::sin(n1 * x1) * std::cos(n2 * x2) +
                                   a[3] * std::sin(n1 * x1) * std::sin(n2 * x2);
                CHECK(std::abs(direct - sep) <= 1e-12);
            }
        }
    }
}

TEST_CASE("general expansion agrees with the 2-d closed form") {
    Rng rng(7);
    const flm::SignMatrix sign = flm::sign_matrix(2);
    for (int rep = 0; rep < 20; ++rep) {
        SubNetwork sn;
        sn.freq = {rng.uniform(-4, 4), rng.uniform(-4, 4)};
        sn.amp = {rng.uniform(-2, 2), rng.uniform(-2, 2)};
        sn.bias = {rng.uniform(-3, 3), rng.uniform(-3, 3)};
        const auto closed = flm::to_separable_2d(sn.amp[0], sn.amp[1], sn.bias[0], sn.bias[1]);
        const SeparableBlock block = flm::to_separable(sn, sign);
        for (int k = 0; k < 4; ++k)
            CHECK(std::abs(block.coeff[k] - closed[k]) <= 1e-14);
    }
}

TEST_CASE("representation identity across dimensions") {
    Rng rng(23);
    for (int m = 1; m <= 4; ++m) {
        const flm::SignMatrix sign = flm::sign_matrix(m);
        for (int rep = 0; rep < 10; ++rep) {
            const FlmModel model = testutil::random_model(m, 3, rng);
            const auto blocks = flm::to_separable(model);
            for (int pt = 0; pt < 50; ++pt) {
                const auto x = testutil::random_point(m, rng);
                double sep = 0.0;
                for (const auto& block : blocks)
                    sep += flm::eval_separable(block, x);
                CHECK(std::abs(flm::eval(model, x) - sep) <= 1e-12);
            }
        }
    }
}

TEST_CASE("m = 1 expansion is the angle-subtraction identity") {
    const flm::SignMatrix sign = flm::sign_matrix(1);
    SubNetwork sn;
    sn.freq = {1.7};
    sn.amp = {0.8};
    sn.bias = {0.4};
    const SeparableBlock block = flm::to_separable(sn, sign);
    CHECK(block.coeff[0] == doctest::Approx(0.8 * std::cos(0.4)).epsilon(1e-15));
    CHECK(block.coeff[1] == doctest::Approx(0.8 * std::sin(0.4)).epsilon(1e-15));
}

TEST_CASE("coefficients are linear in the amplitudes") {
    Rng rng(5);
    const flm::SignMatrix sign = flm::sign_matrix(3);
    SubNetwork sn;
    sn.freq = {1.0, 2.0, 0.5};
    sn.amp = {0.3, -0.7, 1.1, 0.2};
    sn.bias = {0.1, -0.9, 2.2, 0.6};
    const SeparableBlock base = flm::to_separable(sn, sign);
    SubNetwork doubled = sn;
    for (double& a : doubled.amp)
        a *= 2.0;
    const SeparableBlock twice = flm::to_separable(doubled, sign);
    for (std::size_t k = 0; k < base.coeff.size(); ++k)
        CHECK(twice.coeff[k] == doctest::Approx(2.0 * base.coeff[k]).epsilon(1e-14));
}

TEST_CASE("odd-size sine sets pick up sin(bias) with the row sign product") {
    // |I_k| = 3 for k = 8 at m = 3: coefficient must be -sum_i A_i s_i8 sin b_i.
    const flm::SignMatrix sign = flm::sign_matrix(3);
    SubNetwork sn;
    sn.freq = {1.0, 1.0, 1.0};
    sn.amp = {0.5, 1.5, -0.4, 0.9};
    sn.bias = {0.3, 1.1, -0.7, 0.25};
    const SeparableBlock block = flm::to_separable(sn, sign);
    double expect = 0.0;
    for (int i = 1; i <= 4; ++i)
        expect += -sn.amp[i - 1] * flm::sign_factor(sign, i, 8) * std::sin(sn.bias[i - 1]);
    CHECK(block.coeff[7] == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("negating a frequency component flips exactly the matching sine coefficients") {
    Rng rng(97);
    for (int m = 2; m <= 3; ++m) {
        const flm::SignMatrix sign = flm::sign_matrix(m);
        const int l = sign.rows();
        for (int q = 0; q < m; ++q) {
            SubNetwork sn;
            sn.freq.resize(m);
            for (double& f : sn.freq)
                f = rng.uniform(-3, 3);
            for (int i = 0; i < l; ++i) {
                sn.amp.push_back(rng.uniform(-2, 2));
                sn.bias.push_back(rng.uniform(-3, 3));
            }
            // Adjusted subnet: negate freq q and permute units so the sum of
            // cosines is untouched. For q = 0 every unit maps to its
            // complementary sign pattern with a negated bias; otherwise units
            // swap along the bit of coordinate q.
            SubNetwork adj = sn;
            adj.freq[q] = -sn.freq[q];
            for (int i = 0; i < l; ++i) {
                int ip;
                double nb = sn.bias[i];
                if (q == 0) {
                    ip = (l - 1) - i;
                    nb = -sn.bias[i];
                } else {
                    ip = i ^ (1 << (m - 1 - q));
                }
                adj.amp[ip] = sn.amp[i];
                adj.bias[ip] = nb;
            }
            for (int pt = 0; pt < 40; ++pt) {
                const auto x = testutil::random_point(m, rng);
                double orig = 0.0, moved = 0.0;
                for (int i = 0; i < l; ++i) {
                    double phi_o = -sn.bias[i], phi_a = -adj.bias[i];
                    for (int j = 0; j < m; ++j) {
                        phi_o += sign.entry(i, j) * sn.freq[j] * x[j];
                        phi_a += sign.entry(i, j) * adj.freq[j] * x[j];
                    }
                    orig += sn.amp[i] * std::cos(phi_o);
                    moved += adj.amp[i] * std::cos(phi_a);
                }
                CHECK(std::abs(orig - moved) <= 1e-12);
            }
            // And through the expansion: coefficients flip sign exactly on the
            // k whose sine set contains coordinate q+1.
            const SeparableBlock b0 = flm::to_separable(sn, sign);
            const SeparableBlock b1 = flm::to_separable(adj, sign);
            for (int k = 1; k <= (1 << m); ++k) {
                const double want = flm::index_set(k, m).is_sine(q + 1) ? -b0.coeff[k - 1]
                                                                        : b0.coeff[k - 1];
                CHECK(std::abs(b1.coeff[k - 1] - want) <= 1e-12);
            }
        }
    }
}

TEST_CASE("dimension mismatches are rejected") {
    const flm::SignMatrix sign = flm::sign_matrix(2);
    SubNetwork sn;
    sn.freq = {1.0};
    sn.amp = {1.0, 1.0};
    sn.bias = {0.0, 0.0};
    CHECK_THROWS_AS((void)flm::to_separable(sn, sign), std::invalid_argument);
    SeparableBlock block;
    block.freq = {1.0, 2.0};
    block.coeff = {1.0, 0.0, 0.0, 0.0};
    const std::vector<double> x{0.5};
    CHECK_THROWS_AS((void)flm::eval_separable(block, x), std::invalid_argument);
}
