#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>
#include <vector>

#include "flm/sign_matrix.hpp"

using flm::BasisIndex;
using flm::SignMatrix;

TEST_CASE("one-dimensional table is the single row (+1)") {
    const SignMatrix s = flm::sign_matrix(1);
    CHECK(s.rows() == 1);
    CHECK(s.dim() == 1);
    CHECK(s.entry(0, 0) == 1);
}

TEST_CASE("two-dimensional table") {
    const SignMatrix s = flm::sign_matrix(2);
    REQUIRE(s.rows() == 2);
    CHECK(s.entry(0, 0) == 1);
    CHECK(s.entry(0, 1) == 1);
    CHECK(s.entry(1, 0) == 1);
    CHECK(s.entry(1, 1) == -1);
}

TEST_CASE("three-dimensional table, lexicographic order") {
    const SignMatrix s = flm::sign_matrix(3);
    REQUIRE(s.rows() == 4);
    const int expect[4][3] = {{1, 1, 1}, {1, 1, -1}, {1, -1, 1}, {1, -1, -1}};
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 3; ++j)
            CHECK(s.entry(i, j) == expect[i][j]);
}

TEST_CASE("rows enumerate every +1-leading pattern exactly once, in order") {
    for (int m = 1; m <= 6; ++m) {
        const SignMatrix s = flm::sign_matrix(m);
        REQUIRE(s.rows() == (1 << (m - 1)));
        std::set<std::vector<int>> seen;
        int prev_key = -1;
        for (int i = 0; i < s.rows(); ++i) {
            CHECK(s.entry(i, 0) == 1);
            std::vector<int> row;
            int key = 0; // lex rank with +1 < -1
            for (int j = 0; j < m; ++j) {
                const int e = s.entry(i, j);
                CHECK((e == 1 || e == -1));
                row.push_back(e);
                key = key * 2 + (e == -1 ? 1 : 0);
            }
            CHECK(key > prev_key);
            prev_key = key;
            seen.insert(row);
        }
        CHECK(static_cast<int>(seen.size()) == s.rows());
    }
}

TEST_CASE("index_set maps labels to sine sets") {
    SUBCASE("m = 2") {
        CHECK(flm::index_set(1, 2).sine_mask == 0);
        const BasisIndex k2 = flm::index_set(2, 2);
        CHECK_FALSE(k2.is_sine(1));
        CHECK(k2.is_sine(2));
        const BasisIndex k3 = flm::index_set(3, 2);
        CHECK(k3.is_sine(1));
        CHECK_FALSE(k3.is_sine(2));
        const BasisIndex k4 = flm::index_set(4, 2);
        CHECK(k4.is_sine(1));
        CHECK(k4.is_sine(2));
        CHECK(k4.sine_count() == 2);
    }
    SUBCASE("m = 3 spot checks") {
        const BasisIndex k2 = flm::index_set(2, 3);
        CHECK_FALSE(k2.is_sine(1));
        CHECK_FALSE(k2.is_sine(2));
        CHECK(k2.is_sine(3));
        const BasisIndex k5 = flm::index_set(5, 3); // k-1 = 100b
        CHECK(k5.is_sine(1));
        CHECK_FALSE(k5.is_sine(2));
        CHECK_FALSE(k5.is_sine(3));
    }
    SUBCASE("k -> mask is a bijection") {
        for (int m = 1; m <= 5; ++m) {
            std::set<std::uint32_t> masks;
            for (int k = 1; k <= (1 << m); ++k)
                masks.insert(flm::index_set(k, m).sine_mask);
            CHECK(static_cast<int>(masks.size()) == (1 << m));
        }
    }
}

TEST_CASE("sign factors") {
    const SignMatrix s = flm::sign_matrix(2);
    CHECK(flm::sign_factor(s, 1, 4) == 1);
    CHECK(flm::sign_factor(s, 2, 4) == -1);
    CHECK(flm::sign_factor(s, 1, 1) == 1);
    CHECK(flm::sign_factor(s, 2, 1) == 1);

    // Empty sine set always gives +1; full set gives the row product.
    const SignMatrix s3 = flm::sign_matrix(3);
    for (int i = 1; i <= s3.rows(); ++i) {
        CHECK(flm::sign_factor(s3, i, 1) == 1);
        int prod = 1;
        for (int j = 0; j < 3; ++j)
            prod *= s3.entry(i - 1, j);
        CHECK(flm::sign_factor(s3, i, 8) == prod);
    }
}

TEST_CASE("dimension and label bounds are enforced") {
    CHECK_THROWS_AS((void)flm::sign_matrix(0), std::invalid_argument);
    CHECK_THROWS_AS((void)flm::sign_matrix(21), std::invalid_argument);
    CHECK_THROWS_AS((void)flm::index_set(0, 2), std::invalid_argument);
    CHECK_THROWS_AS((void)flm::index_set(5, 2), std::invalid_argument);
    const SignMatrix s = flm::sign_matrix(2);
    CHECK_THROWS_AS((void)flm::sign_factor(s, 0, 1), std::invalid_argument);
    CHECK_THROWS_AS((void)flm::sign_factor(s, 3, 1), std::invalid_argument);
}
