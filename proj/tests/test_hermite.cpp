#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "torusfield/hermite.hpp"
#include "torusfield/rng.hpp"

using namespace torusfield;

namespace {

// explicit sum H_n(x) = n! sum_r (-1)^r x^{n-2r} / (2^r r! (n-2r)!)
double hermite_sum(int n, double x) {
    double nfact = 1.0;
    for (int k = 2; k <= n; ++k) nfact *= k;
    double total = 0.0;
    for (int r = 0; r <= n / 2; ++r) {
        double rfact = 1.0, mfact = 1.0, pw2 = 1.0;
        for (int k = 2; k <= r; ++k) rfact *= k;
        for (int k = 2; k <= n - 2 * r; ++k) mfact *= k;
        for (int k = 0; k < r; ++k) pw2 *= 2.0;
        total += (r % 2 == 0 ? 1.0 : -1.0) * std::pow(x, n - 2 * r) / (pw2 * rfact * mfact);
    }
    return nfact * total;
}

} // namespace

TEST_CASE("values at zero follow the (2r)!/(2^r r!) rule") {
    CHECK(hermite(2, 0.0) == -1.0);
    CHECK(hermite(3, 0.0) == 0.0);
    CHECK(hermite(4, 0.0) == 3.0);
    CHECK(hermite(6, 0.0) == -15.0);
    for (int n = 0; n <= 40; ++n) CHECK(hermite(n, 0.0) == hermite_at_zero(n));
}

TEST_CASE("H2(2) = 3 by hand") {
    CHECK(hermite(2, 2.0) == Catch::Approx(3.0));
}

TEST_CASE("recurrence matches the explicit sum at 20 points for n <= 10") {
    for (int n = 0; n <= 10; ++n) {
        for (int i = 0; i < 20; ++i) {
            const double x = -3.0 + 6.0 * i / 19.0;
            const double ref = hermite_sum(n, x);
            CHECK(hermite(n, x) == Catch::Approx(ref).epsilon(1e-9).margin(1e-9));
        }
    }
}

TEST_CASE("Monte Carlo orthogonality: E[H_m H_n] = n! delta_mn") {
    Rng rng(2024);
    const long N = 1000000;
    double acc[7][7] = {};
    double acc2[7][7] = {};
    for (long i = 0; i < N; ++i) {
        const double x = rng.normal();
        double h[7];
        for (int n = 0; n <= 6; ++n) h[n] = hermite(n, x);
        for (int a = 0; a <= 6; ++a)
            for (int b = a; b <= 6; ++b) {
                acc[a][b] += h[a] * h[b];
                acc2[a][b] += h[a] * h[b] * h[a] * h[b];
            }
    }
    for (int a = 0; a <= 6; ++a) {
        double afact = 1.0;
        for (int k = 2; k <= a; ++k) afact *= k;
        for (int b = a; b <= 6; ++b) {
            const double mean = acc[a][b] / N;
            const double var = acc2[a][b] / N - mean * mean;
            const double se = std::sqrt(var / N);
            const double target = (a == b) ? afact : 0.0;
            CHECK(std::abs(mean - target) <= 3.0 * se + 1e-12);
        }
    }
}

TEST_CASE("hermite_multi is the coordinate product") {
    const MultiIndex alpha = {2, 0, 3};
    const std::vector<double> x = {0.7, -1.1, 0.4};
    CHECK(hermite_multi(alpha, x) ==
          Catch::Approx(hermite(2, 0.7) * hermite(0, -1.1) * hermite(3, 0.4)));
}

TEST_CASE("multi-index enumeration is graded and complete") {
    const auto grade3 = multi_indices_of_order(2, 3);
    REQUIRE(grade3.size() == 4);
    CHECK(grade3.front() == MultiIndex{3, 0});
    CHECK(grade3.back() == MultiIndex{0, 3});
    const auto upto = multi_indices_up_to(3, 4);
    CHECK(upto.size() == 35); // C(4+3,3)
    CHECK(multi_order(upto.back()) == 4);
    CHECK(multi_factorial(MultiIndex{3, 2}) == 12.0);
}
