#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "torusfield/covariance.hpp"
#include "torusfield/field.hpp"

using namespace torusfield;

namespace {

FieldSample single_frequency(int m, std::array<int, 3> k, double amp, double a, double b) {
    FieldSample s;
    s.m = m;
    s.hbar = 0.25;
    s.freqs.push_back(k);
    s.amplitude.push_back(amp);
    s.coeff_cos.push_back(a);
    s.coeff_sin.push_back(b);
    return s;
}

} // namespace

TEST_CASE("active set for gaussian at hbar = 1/16 follows the cutoff scan") {
    const WeightSpec g = WeightSpec::gaussian();
    const FieldSample s = build_sample(g, 1, 1.0 / 16.0, Rng(1));
    // oracle: scan k until the weight drops below eps_cut
    int kmax_scan = 0;
    while (g(kTwoPi * (1.0 / 16.0) * (kmax_scan + 1)) >= g.eps_cut) ++kmax_scan;
    int kmax_stored = 0;
    for (const auto& k : s.freqs) kmax_stored = std::max(kmax_stored, std::abs(k[0]));
    CHECK(kmax_stored == kmax_scan);
    // and the ceil bound from the spec of the cutoff
    const int bound = static_cast<int>(
        std::ceil(std::sqrt(2.0 * std::log(1.0 / g.eps_cut)) / (kTwoPi / 16.0)));
    CHECK(kmax_stored <= bound);
    CHECK(s.size() == static_cast<std::size_t>(kmax_scan) + 1);
    for (double a : s.amplitude) CHECK(a > 0.0);
}

TEST_CASE("same seed gives identical coefficients") {
    const WeightSpec g = WeightSpec::gaussian();
    const FieldSample a = build_sample(g, 1, 1.0 / 8.0, Rng::substream(7, 3, 11));
    const FieldSample b = build_sample(g, 1, 1.0 / 8.0, Rng::substream(7, 3, 11));
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a.coeff_cos[i] == b.coeff_cos[i]);
        CHECK(a.coeff_sin[i] == b.coeff_sin[i]);
    }
}

TEST_CASE("frequency budget error") {
    const WeightSpec g = WeightSpec::gaussian();
    CHECK_THROWS_AS(build_sample(g, 2, 1.0 / 24.0, Rng(1), 100), BudgetError);
}

TEST_CASE("single-frequency jet by hand differentiation") {
    // a cos(2 pi theta_1): value a at 0, gradient 0, H11 = -a (2pi)^2
    const double a = 0.8;
    const FieldSample s = single_frequency(1, {1, 0, 0}, 1.0, a, 0.0);
    const Jet jet = eval_jet(s, {0, 0, 0}, 3);
    CHECK(jet.value == Catch::Approx(a));
    CHECK(jet.grad[0] == Catch::Approx(0.0).margin(1e-14));
    CHECK(jet.hess(0, 0) == Catch::Approx(-a * kTwoPi * kTwoPi));
    CHECK(jet.third[0] == Catch::Approx(0.0).margin(1e-10));
}

TEST_CASE("gradient and Hessian agree with central finite differences") {
    const WeightSpec g = WeightSpec::gaussian();
    const FieldSample s = build_sample(g, 2, 1.0 / 6.0, Rng(99));
    Rng pos_rng(5);
    for (int rep = 0; rep < 10; ++rep) {
        Vec3 th = {pos_rng.uniform(), pos_rng.uniform(), 0};
        const Jet jet = eval_jet(s, th, 2);
        const double h = 1e-5;
        const double hess_scale = 1.0 + jet.hess.max_abs();
        for (int j = 0; j < 2; ++j) {
            Vec3 tp = th, tm = th;
            tp[static_cast<std::size_t>(j)] += h;
            tm[static_cast<std::size_t>(j)] -= h;
            const double fd = (eval_jet(s, tp, 0).value - eval_jet(s, tm, 0).value) / (2 * h);
            CHECK(std::abs(jet.grad[static_cast<std::size_t>(j)] - fd) < 1e-6 * hess_scale);
            const double fd2 = (eval_jet(s, tp, 1).grad[0] - eval_jet(s, tm, 1).grad[0]) / (2 * h);
            CHECK(std::abs(jet.hess(0, j) - fd2) < 1e-4 * (1.0 + hess_scale * kTwoPi));
        }
    }
}

TEST_CASE("field is 1-periodic in each coordinate") {
    const WeightSpec g = WeightSpec::gaussian();
    const FieldSample s = build_sample(g, 2, 1.0 / 5.0, Rng(42));
    const Vec3 th = {0.37, 0.81, 0};
    const Jet a = eval_jet(s, th, 0);
    const Jet b = eval_jet(s, {th[0] + 1.0, th[1], 0}, 0);
    const Jet c = eval_jet(s, {th[0], th[1] - 1.0, 0}, 0);
    CHECK(a.value == Catch::Approx(b.value).epsilon(1e-12));
    CHECK(a.value == Catch::Approx(c.value).epsilon(1e-12));
}

TEST_CASE("exact covariance at coincident points is the amplitude square sum") {
    const WeightSpec g = WeightSpec::gaussian();
    const FieldSample s = build_sample(g, 1, 1.0 / 8.0, Rng(3));
    double amp2 = 0.0;
    for (double a : s.amplitude) amp2 += a * a;
    const Vec3 th = {0.3, 0, 0};
    CHECK(exact_sample_covariance(s, th, th) == Catch::Approx(amp2).epsilon(1e-12));
    CHECK(amp2 > 0.0);
}

TEST_CASE("exact covariance equals the periodized covariance V^hbar((theta'-theta)/hbar)") {
    const WeightSpec g = WeightSpec::gaussian();
    for (int m : {1, 2}) {
        const double hbar = 1.0 / 8.0;
        const FieldSample s = build_sample(g, m, hbar, Rng(4));
        const Vec3 th = {0.12, 0.55, 0};
        const Vec3 tp = {0.48, 0.71, 0};
        const double cov = exact_sample_covariance(s, th, tp);
        std::array<double, 3> z = {(tp[0] - th[0]) / hbar, m >= 2 ? (tp[1] - th[1]) / hbar : 0.0, 0.0};
        const CovarianceJet vh = periodized_covariance_jet(g, m, hbar, z, 0);
        const double tol = g.eps_cut * static_cast<double>(s.size()) * 2.0 + 1e-10;
        CHECK(std::abs(cov - vh.at(MultiIndex(static_cast<std::size_t>(m), 0))) < tol);
    }
}

TEST_CASE("empirical covariance over 1e5 samples matches the exact sum (5 SE)") {
    const WeightSpec g = WeightSpec::gaussian();
    const double hbar = 0.25;
    const Vec3 th = {0.2, 0, 0};
    const Vec3 tp = {0.45, 0, 0};
    const long N = 100000;
    double acc = 0.0, acc2 = 0.0;
    double exact = 0.0;
    for (long i = 0; i < N; ++i) {
        const FieldSample s = build_sample(g, 1, hbar, Rng::substream(1234, 0, static_cast<std::uint64_t>(i)));
        if (i == 0) exact = exact_sample_covariance(s, th, tp);
        const double prod = eval_jet(s, th, 0).value * eval_jet(s, tp, 0).value;
        acc += prod;
        acc2 += prod * prod;
    }
    const double mean = acc / N;
    const double se = std::sqrt((acc2 / N - mean * mean) / N);
    CHECK(std::abs(mean - exact) <= 5.0 * se);
}

TEST_CASE("stationarity: pairs with equal separation have equal exact covariance") {
    const WeightSpec g = WeightSpec::gaussian();
    const FieldSample s = build_sample(g, 1, 1.0 / 8.0, Rng(6));
    const double d = 0.17;
    const double c1 = exact_sample_covariance(s, {0.1, 0, 0}, {0.1 + d, 0, 0});
    const double c2 = exact_sample_covariance(s, {0.6, 0, 0}, {0.6 + d, 0, 0});
    const double c3 = exact_sample_covariance(s, {0.95, 0, 0}, {0.95 + d, 0, 0});
    CHECK(c1 == Catch::Approx(c2).epsilon(1e-12));
    CHECK(c1 == Catch::Approx(c3).epsilon(1e-12));
}

TEST_CASE("coefficient variance is 1 across samples (5 SE)") {
    const WeightSpec g = WeightSpec::gaussian();
    const long N = 10000;
    double acc = 0.0, acc2 = 0.0;
    for (long i = 0; i < N; ++i) {
        const FieldSample s = build_sample(g, 1, 0.25, Rng::substream(777, 1, static_cast<std::uint64_t>(i)));
        const double c = s.coeff_cos[1];
        acc += c * c;
        acc2 += c * c * c * c;
    }
    const double var = acc / N;
    const double se = std::sqrt((acc2 / N - var * var) / N);
    CHECK(std::abs(var - 1.0) <= 5.0 * se);
}

TEST_CASE("rescaled jet: value, chain rule, and chart positions") {
    const WeightSpec g = WeightSpec::gaussian();
    const FieldSample s = build_sample(g, 1, 1.0 / 8.0, Rng(8));
    const Vec3 x = {1.7, 0, 0};
    const Jet y = rescaled_jet(s, x, 2);
    const Jet xjet = eval_jet(s, {s.hbar * 1.7, 0, 0}, 2);
    CHECK(y.value == Catch::Approx(xjet.value).epsilon(1e-12));
    CHECK(y.grad[0] == Catch::Approx(s.hbar * xjet.grad[0]).epsilon(1e-12));
    CHECK(y.hess(0, 0) == Catch::Approx(s.hbar * s.hbar * xjet.hess(0, 0)).epsilon(1e-12));
}

TEST_CASE("grid evaluator agrees with pointwise jets") {
    const WeightSpec g = WeightSpec::gaussian();
    for (int m : {1, 2}) {
        const FieldSample s = build_sample(g, m, 1.0 / 6.0, Rng(12));
        const int n = 18;
        const GridEval ge = eval_gradient_grid(s, n);
        REQUIRE(ge.n == n);
        for (int i0 = 0; i0 < n; i0 += 5)
            for (int i1 = 0; i1 < (m == 2 ? n : 1); i1 += 5) {
                const Vec3 th = {static_cast<double>(i0) / n, static_cast<double>(i1) / n, 0};
                const Jet jet = eval_jet(s, th, 1);
                const std::size_t node = m == 1 ? static_cast<std::size_t>(i0)
                                                : static_cast<std::size_t>(i0) * n + i1;
                for (int j = 0; j < m; ++j)
                    CHECK(ge.grad[node * static_cast<std::size_t>(m) + static_cast<std::size_t>(j)] ==
                          Catch::Approx(jet.grad[static_cast<std::size_t>(j)]).margin(1e-10));
            }
        CHECK(ge.grad_rms > 0.0);
    }
}

TEST_CASE("sample dump round-trips through the plain-text format") {
    const WeightSpec g = WeightSpec::gaussian();
    FieldSample s = build_sample(g, 2, 1.0 / 5.0, Rng(13));
    s.seed_lo = 42;
    s.seed_hi = 7;
    std::stringstream ss;
    dump_sample(s, ss);
    const FieldSample t = load_sample(ss);
    REQUIRE(t.size() == s.size());
    CHECK(t.m == s.m);
    CHECK(t.hbar == s.hbar);
    CHECK(t.seed_lo == 42);
    for (std::size_t i = 0; i < s.size(); ++i) {
        CHECK(t.freqs[i] == s.freqs[i]);
        CHECK(t.amplitude[i] == s.amplitude[i]);
        CHECK(t.coeff_cos[i] == s.coeff_cos[i]);
        CHECK(t.coeff_sin[i] == s.coeff_sin[i]);
    }
}
