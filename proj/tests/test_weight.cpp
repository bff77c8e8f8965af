#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "torusfield/weight.hpp"

using namespace torusfield;

namespace {

// analytic gaussian moments: I_k = 2^{(k-1)/2} Gamma((k+1)/2)
double gaussian_moment(int k) {
    return std::pow(2.0, (k - 1) / 2.0) * std::tgamma((k + 1) / 2.0);
}

// independent oracle: dense trapezoid sum
double trapezoid_moment(const WeightSpec& w, int k) {
    const double R = w.trunc_radius;
    const int n = 400000;
    const double h = R / n;
    double s = 0.5 * (k == 0 ? w(0.0) : 0.0) + 0.5 * w(R) * std::pow(R, k);
    for (int i = 1; i < n; ++i) {
        const double r = i * h;
        s += w(r) * std::pow(r, k);
    }
    return s * h;
}

} // namespace

TEST_CASE("weight evaluation basics") {
    const WeightSpec g = WeightSpec::gaussian();
    CHECK(g(0.0) == 1.0);
    CHECK(g(1.0) == Catch::Approx(std::exp(-0.5)).epsilon(1e-15));

    const WeightSpec b = WeightSpec::bump(1.0);
    CHECK(b(2.0) == 0.0);
    CHECK(b(1.0) == 0.0); // support is [0, R)
    CHECK(b(0.0) == Catch::Approx(1.0));
    CHECK(b(0.5) > 0.0);

    const WeightSpec r = WeightSpec::rational();
    CHECK(r(0.0) == 1.0);
    CHECK(r(1.0) == Catch::Approx(std::pow(2.0, -8.0)));

    CHECK_THROWS_AS(g(-1.0), Error);
}

TEST_CASE("weight truncation radius invariant") {
    for (const WeightSpec& w :
         {WeightSpec::gaussian(), WeightSpec::rational(), WeightSpec::gaussian(2.5, 0.3)}) {
        REQUIRE(w.trunc_radius > 0.0);
        for (double r = w.trunc_radius; r < 3.0 * w.trunc_radius; r += 0.5)
            CHECK(w(r) * std::pow(r, 8) < 1e-12);
    }
}

TEST_CASE("gaussian radial moments match the Gamma-integral oracle") {
    const WeightSpec g = WeightSpec::gaussian();
    CHECK(radial_moment(g, 1) == Catch::Approx(1.0).epsilon(1e-9));
    CHECK(radial_moment(g, 3) == Catch::Approx(2.0).epsilon(1e-9));
    CHECK(radial_moment(g, 4) == Catch::Approx(3.0 * std::sqrt(3.14159265358979 / 2.0)).epsilon(1e-9));
    for (int k = 0; k <= 12; ++k) {
        const double got = radial_moment(g, k);
        CHECK(got == Catch::Approx(gaussian_moment(k)).epsilon(1e-8));
        CHECK(got > 0.0);
    }
}

TEST_CASE("moments agree with a dense trapezoid oracle for every family") {
    for (const WeightSpec& w :
         {WeightSpec::gaussian(), WeightSpec::bump(), WeightSpec::rational()}) {
        for (int k : {0, 2, 5, 9}) {
            const double got = radial_moment(w, k);
            CHECK(got == Catch::Approx(trapezoid_moment(w, k)).epsilon(1e-6));
            CHECK(got > 0.0);
        }
    }
}

TEST_CASE("moment order is capped") {
    const WeightSpec g = WeightSpec::gaussian();
    CHECK_THROWS_AS(radial_moment(g, 13), ConfigError);
}

TEST_CASE("amplitude scales moments linearly") {
    const WeightSpec g1 = WeightSpec::gaussian(1.0, 1.0);
    const WeightSpec g2 = WeightSpec::gaussian(1.0, 2.0);
    CHECK(radial_moment(g2, 4) == Catch::Approx(2.0 * radial_moment(g1, 4)).epsilon(1e-9));
}
