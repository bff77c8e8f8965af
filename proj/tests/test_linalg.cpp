#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "torusfield/linalg.hpp"
#include "torusfield/rng.hpp"

using namespace torusfield;

TEST_CASE("factor_psd reproduces hand Cholesky") {
    SymmetricMatrix m(2);
    m.at(0, 0) = 4.0;
    m.at(0, 1) = 2.0;
    m.at(1, 1) = 2.0;
    const PsdFactor f = factor_psd(m);
    CHECK(f.at(0, 0) == Catch::Approx(2.0));
    CHECK(f.at(1, 0) == Catch::Approx(1.0));
    CHECK(f.at(1, 1) == Catch::Approx(1.0));
    CHECK(f.clamped == 0);
}

TEST_CASE("factor_psd of the identity is the identity") {
    const PsdFactor f = factor_psd(SymmetricMatrix::identity(5));
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j <= i; ++j) CHECK(f.at(i, j) == Catch::Approx(i == j ? 1.0 : 0.0));
}

TEST_CASE("indefinite matrix raises NotPsdError with the pivot") {
    SymmetricMatrix m(2);
    m.at(0, 0) = 1.0;
    m.at(0, 1) = 2.0;
    m.at(1, 1) = 1.0;
    try {
        factor_psd(m);
        FAIL("expected NotPsdError");
    } catch (const NotPsdError& e) {
        CHECK(e.pivot < -1e-10);
        CHECK(e.index == 1);
    }
}

TEST_CASE("semidefinite pivots are clamped, not rejected") {
    // rank-1 matrix vv^T with v = (1, 2)
    SymmetricMatrix m(2);
    m.at(0, 0) = 1.0;
    m.at(0, 1) = 2.0;
    m.at(1, 1) = 4.0;
    const PsdFactor f = factor_psd(m);
    CHECK(f.clamped == 1);
    // L L^T still reproduces the matrix
    CHECK(f.at(1, 0) * f.at(1, 0) == Catch::Approx(4.0));
}

TEST_CASE("factorization residual is tiny relative to the matrix") {
    Rng rng(77);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 2 + static_cast<int>(rng.next_u64() % 10);
        // random PSD: G G^T
        std::vector<double> g(static_cast<std::size_t>(n) * n);
        for (double& v : g) v = rng.normal();
        SymmetricMatrix m(n);
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) {
                double s = 0.0;
                for (int k = 0; k < n; ++k)
                    s += g[static_cast<std::size_t>(i) * n + k] * g[static_cast<std::size_t>(j) * n + k];
                m.at(i, j) = s;
            }
        const PsdFactor f = factor_psd(m);
        double worst = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j <= i; ++j) {
                double s = 0.0;
                for (int k = 0; k < n; ++k) s += f.at(i, k) * f.at(j, k);
                worst = std::max(worst, std::abs(s - m(i, j)));
            }
        CHECK(worst <= 1e-10 * std::max(m.max_abs(), 1.0));
    }
}

TEST_CASE("jacobi eigenvalues on a known matrix") {
    SymmetricMatrix m(3);
    m.at(0, 0) = 2.0;
    m.at(1, 1) = 3.0;
    m.at(2, 2) = 4.0;
    m.at(0, 1) = 1.0;
    const EigenSym e = eigen_sym(m);
    // eigenvalues of [[2,1,0],[1,3,0],[0,0,4]]: (5 +- sqrt(5))/2 and 4
    CHECK(e.values[0] == Catch::Approx((5.0 - std::sqrt(5.0)) / 2.0));
    CHECK(e.values[1] == Catch::Approx((5.0 + std::sqrt(5.0)) / 2.0));
    CHECK(e.values[2] == Catch::Approx(4.0));
}

TEST_CASE("sqrt_psd squares back") {
    Rng rng(5);
    SymmetricMatrix m(4);
    for (int i = 0; i < 4; ++i)
        for (int j = i; j < 4; ++j) m.at(i, j) = rng.normal();
    // make PSD: m <- m m^T via eigen trick: use m + shift of |min eig|
    EigenSym e = eigen_sym(m);
    const double shift = std::abs(e.values[0]) + 0.5;
    for (int i = 0; i < 4; ++i) m.at(i, i) += shift;
    const SymmetricMatrix r = sqrt_psd(m);
    for (int i = 0; i < 4; ++i)
        for (int j = i; j < 4; ++j) {
            double s = 0.0;
            for (int k = 0; k < 4; ++k) s += r(i, k) * r(k, j);
            CHECK(s == Catch::Approx(m(i, j)).margin(1e-10));
        }
}

TEST_CASE("dense solve on a 3x3 system") {
    std::vector<double> a = {2, 1, 0, 1, 3, 1, 0, 1, 4};
    std::vector<double> b = {1, 2, 3};
    std::vector<double> x;
    REQUIRE(solve_dense(3, a, b, x));
    CHECK(2 * x[0] + x[1] == Catch::Approx(1.0));
    CHECK(x[0] + 3 * x[1] + x[2] == Catch::Approx(2.0));
    CHECK(x[1] + 4 * x[2] == Catch::Approx(3.0));
}

TEST_CASE("sym_from_vec ordering: diagonal first, then lexicographic off-diagonal") {
    const std::vector<double> v = {1.0, 2.0, 3.0, 12.0, 13.0, 23.0};
    const SymmetricMatrix a = sym_from_vec(3, v);
    CHECK(a(0, 0) == 1.0);
    CHECK(a(1, 1) == 2.0);
    CHECK(a(2, 2) == 3.0);
    CHECK(a(0, 1) == 12.0);
    CHECK(a(0, 2) == 13.0);
    CHECK(a(1, 2) == 23.0);
    CHECK(sym_vec_dim(3) == 6);
}
