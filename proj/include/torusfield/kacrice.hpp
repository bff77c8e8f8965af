#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "torusfield/covariance.hpp"
#include "torusfield/gaussian.hpp"
#include "torusfield/parallel.hpp"
#include "torusfield/rng.hpp"

namespace torusfield {

inline constexpr double kPi = 3.14159265358979323846;

struct DensityEstimate {
    double value = 0.0;
    double se = 0.0; // 0 for quadrature-only routes
    std::string route;
    long mc_samples = 0;
};

// Mean critical-point density per unit volume of the rescaled field:
//   E|det Hess Y(0)| / sqrt(det(-2 pi Hess V(0)))
// with the Hessian law assembled from fourth derivatives of V (or V^hbar).
inline DensityEstimate density_route_main1(const WeightSpec& spec, int m, long mc_samples,
                                           Rng rng, double hbar = 0.0) {
    const WeightConstants wc = weight_constants(spec, m, hbar);
    const MonteCarloEstimate det = expected_abs_det_cov(m, wc.hess_cov, mc_samples, rng);
    DensityEstimate d;
    d.route = hbar > 0.0 ? "main1-mc-hbar" : "main1-mc";
    d.mc_samples = mc_samples;
    const double denom = std::sqrt(wc.det_neg_2pi_hess);
    d.value = det.value / denom;
    d.se = det.se / denom;
    return d;
}

// m = 1 only: E|N(0, lambda4)| = sqrt(2 lambda4 / pi) makes the density exact
// up to quadrature error.
inline DensityEstimate density_main1_exact_1d(const WeightSpec& spec, double hbar = 0.0) {
    const WeightConstants wc = weight_constants(spec, 1, hbar);
    const double lambda4 = wc.hess_cov(0, 0);
    DensityEstimate d;
    d.route = "main1-exact";
    d.value = std::sqrt(2.0 * lambda4 / kPi) / std::sqrt(wc.det_neg_2pi_hess);
    d.se = 0.0;
    return d;
}

// Literal radial-moment route:
//   (I_{m+1} / (2 pi (m+2) I_{m+3}))^{m/2} E_GOE|det A|.
// Under this project's Fourier convention it does NOT agree with the main1
// route (the two are reported side by side; simulation referees main1).
inline DensityEstimate density_route_cmw(const WeightSpec& spec, int m, long mc_samples, Rng rng) {
    const double i_lo = radial_moment(spec, m + 1);
    const double i_hi = radial_moment(spec, m + 3);
    const MonteCarloEstimate goe = expected_abs_det_goe(m, mc_samples, rng);
    const double pref = std::pow(i_lo / (2.0 * kPi * (m + 2) * i_hi), 0.5 * m);
    DensityEstimate d;
    d.route = "cmw";
    d.mc_samples = mc_samples;
    d.value = pref * goe.value;
    d.se = pref * goe.se;
    return d;
}

// Large-m trend value 8/sqrt(pi m) Gamma((m+3)/2) (2 I_{m+3}/(pi (m+2) I_{m+1}))^{m/2}.
inline DensityEstimate density_asymptotic(const WeightSpec& spec, int m) {
    const double i_lo = radial_moment(spec, m + 1);
    const double i_hi = radial_moment(spec, m + 3);
    DensityEstimate d;
    d.route = "asymptotic";
    d.value = 8.0 / std::sqrt(kPi * m) * std::tgamma(0.5 * (m + 3)) *
              std::pow(2.0 * i_hi / (kPi * (m + 2) * i_lo), 0.5 * m);
    d.se = 0.0;
    return d;
}

// Covariance of the joint Gaussian vector (grad Y(0), grad Y(y), Hess Y(0),
// Hess Y(y)), dimension 2m + 2 nu(m), assembled from the order-<=4 jets of V
// (or V^hbar) via E[d^a Y(0) d^b Y(y)] = (-1)^|a| d^{a+b} V(y).
struct JetCovariance {
    int m = 1;
    double hbar = 0.0;
    std::array<double, 3> y = {0, 0, 0};
    SymmetricMatrix full;

    int grad_dim() const { return 2 * m; }
    int hess_offset() const { return 2 * m; }

    // gradient self-covariance at one point (A block, = -Hess V(0))
    SymmetricMatrix block_a() const {
        SymmetricMatrix a(m);
        for (int i = 0; i < m; ++i)
            for (int j = i; j < m; ++j) a.at(i, j) = full(i, j);
        return a;
    }
    // gradient cross-covariance between the two points (B(y), = -Hess V(y))
    SymmetricMatrix block_b() const {
        SymmetricMatrix b(m);
        for (int i = 0; i < m; ++i)
            for (int j = i; j < m; ++j) b.at(i, j) = full(i, m + j);
        return b;
    }
};

inline JetCovariance jet_pair_covariance(const WeightSpec& spec, int m, double hbar,
                                         std::array<double, 3> y) {
    double ynorm = 0.0;
    for (int j = 0; j < m; ++j) ynorm += y[static_cast<std::size_t>(j)] * y[static_cast<std::size_t>(j)];
    if (!(ynorm > 0.0)) throw ConfigError("jet_pair_covariance requires |y| > 0");
    if (hbar < 0.0 || hbar > 0.25) throw ConfigError("jet_pair_covariance requires hbar in [0, 1/4]");
    if (hbar > 0.0)
        for (int j = 0; j < m; ++j)
            if (std::abs(y[static_cast<std::size_t>(j)]) > 0.5 / hbar + 1e-12)
                throw ConfigError("jet_pair_covariance requires |y|_inf <= 1/(2 hbar)");

    const CovarianceJet j0 = hbar > 0.0 ? periodized_covariance_jet(spec, m, hbar, {0, 0, 0}, 4)
                                        : covariance_jet(spec, m, {0, 0, 0}, 4);
    const CovarianceJet jy = hbar > 0.0 ? periodized_covariance_jet(spec, m, hbar, y, 4)
                                        : covariance_jet(spec, m, y, 4);

    // variable layout: [grad(0) | grad(y) | hess(0) | hess(y)]
    struct Var {
        MultiIndex alpha;
        int point; // 0 or 1
    };
    std::vector<Var> lay;
    const auto slots = sym_vec_slots(m);
    for (int p = 0; p < 2; ++p)
        for (int i = 0; i < m; ++i) {
            MultiIndex a(static_cast<std::size_t>(m), 0);
            a[static_cast<std::size_t>(i)] = 1;
            lay.push_back({a, p});
        }
    for (int p = 0; p < 2; ++p)
        for (const auto& s : slots) {
            MultiIndex a(static_cast<std::size_t>(m), 0);
            a[static_cast<std::size_t>(s.first)] += 1;
            a[static_cast<std::size_t>(s.second)] += 1;
            lay.push_back({a, p});
        }

    JetCovariance out;
    out.m = m;
    out.hbar = hbar;
    out.y = y;
    const int nu = sym_vec_dim(m);
    const int dim = 2 * m + 2 * nu;
    out.full = SymmetricMatrix(dim);
    for (int a = 0; a < dim; ++a) {
        for (int b = a; b < dim; ++b) {
            const Var& va = lay[static_cast<std::size_t>(a)];
            const Var& vb = lay[static_cast<std::size_t>(b)];
            MultiIndex sum(static_cast<std::size_t>(m), 0);
            for (int j = 0; j < m; ++j)
                sum[static_cast<std::size_t>(j)] = va.alpha[static_cast<std::size_t>(j)] +
                                                   vb.alpha[static_cast<std::size_t>(j)];
            double val;
            if (va.point == vb.point) {
                val = j0.at(sum);
                const int oa = multi_order(va.alpha);
                val *= (oa % 2 == 0 ? 1.0 : -1.0);
            } else {
                // orient so alpha is the derivative at point 0
                const MultiIndex& alpha0 = va.point == 0 ? va.alpha : vb.alpha;
                val = jy.at(sum) * (multi_order(alpha0) % 2 == 0 ? 1.0 : -1.0);
            }
            out.full.at(a, b) = val;
        }
    }
    return out;
}

// Two-point intensity rho_2(v, y) = g(v, y) p_{0,y}(v, v): the conditional
// Monte-Carlo expectation E[|det H(0) det H(y)| | grad = (v,v)] times the
// Gaussian density of (v, v) under the gradient pair.
struct TwoPointResult {
    double value = 0.0;
    double se = 0.0;
    double density = 0.0; // p_{0,y}(v,v)
    double cond_mean = 0.0;
};

inline TwoPointResult two_point_intensity_core(const JetCovariance& jc,
                                               const std::vector<double>& v, long mc_samples,
                                               Rng& rng) {
    const int m = jc.m;
    const int nu = sym_vec_dim(m);
    std::vector<int> grad_idx;
    std::vector<double> vv;
    for (int i = 0; i < 2 * m; ++i) grad_idx.push_back(i);
    for (int p = 0; p < 2; ++p)
        for (int i = 0; i < m; ++i) vv.push_back(v[static_cast<std::size_t>(i)]);

    // p_{0,y}(v,v) from the gradient block
    SymmetricMatrix gblock(2 * m);
    for (int a = 0; a < 2 * m; ++a)
        for (int b = a; b < 2 * m; ++b) gblock.at(a, b) = jc.full(a, b);
    PsdFactor gf;
    try {
        gf = factor_psd(gblock);
    } catch (const NotPsdError& e) {
        throw DegenerateConditioningError(e.pivot);
    }
    if (gf.clamped > 0) throw DegenerateConditioningError(gf.smallest_pivot);
    const std::vector<double> sol = gf.solve(vv);
    double quad = 0.0;
    for (std::size_t i = 0; i < vv.size(); ++i) quad += vv[i] * sol[i];
    const double density = std::exp(-0.5 * quad - gf.log_det()) / std::pow(2.0 * kPi, m);

    const ConditionedGaussian cond = condition_gaussian(jc.full, grad_idx, vv);
    const PsdFactor cf = factor_psd(cond.cov);
    double sum = 0.0, sum2 = 0.0;
    std::vector<double> h0(static_cast<std::size_t>(nu)), hy(static_cast<std::size_t>(nu));
    for (long i = 0; i < mc_samples; ++i) {
        const std::vector<double> draw = sample_gaussian(cf, rng);
        for (int k = 0; k < nu; ++k) {
            h0[static_cast<std::size_t>(k)] = cond.mean[static_cast<std::size_t>(k)] +
                                              draw[static_cast<std::size_t>(k)];
            hy[static_cast<std::size_t>(k)] = cond.mean[static_cast<std::size_t>(nu + k)] +
                                              draw[static_cast<std::size_t>(nu + k)];
        }
        const double dd = std::abs(det_sym(sym_from_vec(m, h0)) * det_sym(sym_from_vec(m, hy)));
        sum += dd;
        sum2 += dd * dd;
    }
    TwoPointResult r;
    r.density = density;
    r.cond_mean = sum / static_cast<double>(mc_samples);
    const double var = std::max(sum2 / static_cast<double>(mc_samples) - r.cond_mean * r.cond_mean, 0.0);
    r.value = r.cond_mean * density;
    r.se = std::sqrt(var / static_cast<double>(mc_samples)) * density;
    return r;
}

inline TwoPointResult two_point_intensity(const WeightSpec& spec, int m, double hbar,
                                          std::array<double, 3> y, const std::vector<double>& v,
                                          long mc_samples, Rng rng) {
    const JetCovariance jc = jet_pair_covariance(spec, m, hbar, y);
    return two_point_intensity_core(jc, v, mc_samples, rng);
}

// ---- second factorial moment and the variance prediction ----

struct KacRiceSettings {
    long mc_per_node = 20000;        // conditional draws per y node
    double node_spacing_corr = 0.125;// outer node spacing, correlation lengths
    double r_sing_corr = 1e-3;       // excised ball radius, correlation lengths
    bool torus_window = false;       // overlap L^m (torus) instead of box overlap
    long density_mc = 4000000;       // draws for the m = 2 mean density
    int threads = 1;
};

struct SecondMomentResult {
    double value = 0.0;    // E[Z(Z-1)]
    double se = 0.0;
    double excision_bound = 0.0;
    double window = 0.0;
    double mean_density = 0.0;
    double mean_density_se = 0.0;
    long nodes = 0;
    // variance prediction Var = E[Z(Z-1)] + E[Z] - E[Z]^2 assembled in the
    // numerically stable form rho1 L^m + int overlap (rho2 - rho1^2)
    double variance = 0.0;
    double variance_se = 0.0;
    double mean_count = 0.0;
};

// Integrate the two-point intensity against the window overlap.  The rho1^2
// part of the integrand integrates in closed form, so only the excess
// delta(y) = rho2(y) - rho1^2 is quadratured; that removes the cancellation
// between E[Z(Z-1)] and E[Z]^2 in the variance assembly.  The intensity is
// even in each coordinate of y, so only one orthant of nodes is evaluated.
inline SecondMomentResult second_factorial_moment(const WeightSpec& spec, int m, double hbar,
                                                  double window, const KacRiceSettings& settings,
                                                  Rng rng) {
    if (m != 1 && m != 2) throw ConfigError("second_factorial_moment supports m in {1, 2}");
    if (hbar > 0.0 && !settings.torus_window && window > 0.5 / hbar + 1e-9)
        throw ConfigError("box window must satisfy L <= 1/(2 hbar)");
    if (settings.torus_window && (!(hbar > 0.0) || std::abs(window * hbar - 1.0) > 1e-9))
        throw ConfigError("torus window must be the full period 1/hbar with hbar > 0");
    const std::uint64_t base_seed = rng.next_u64();

    const WeightConstants wc = weight_constants(spec, m, hbar);
    const double rho = wc.corr_length;
    const double L = window;
    const double ymax = settings.torus_window ? 0.5 * L : L;
    const double r_sing = settings.r_sing_corr * rho;

    // mean density: exact Gaussian integral for m = 1, Monte Carlo for m = 2
    DensityEstimate rho1e;
    if (m == 1) {
        rho1e = density_main1_exact_1d(spec, hbar);
    } else {
        Rng drng = Rng::substream(base_seed, 0xD0, 0);
        rho1e = density_route_main1(spec, m, settings.density_mc, drng, hbar);
    }
    const double rho1 = rho1e.value;

    // 1-D node ladder: geometric refinement from r_sing up to one correlation
    // length (ratio 2), then uniform spacing out to ymax.  For m = 1 the
    // ladder starts exactly at r_sing (the ball is handled separately); for
    // m = 2 a 0-node is needed so the near-axis strips are integrated.
    std::vector<double> ladder;
    if (m == 2) ladder.push_back(0.0);
    for (double t = r_sing; t < std::min(rho, ymax); t *= 2.0) ladder.push_back(t);
    const double spacing = settings.node_spacing_corr * rho;
    for (double t = std::min(rho, ymax); t < ymax - 1e-12; t += spacing) ladder.push_back(t);
    ladder.push_back(ymax);
    const std::size_t nl = ladder.size();
    std::vector<double> lw(nl, 0.0); // 1-D trapezoid weights, doubled for the mirror
    for (std::size_t i = 0; i + 1 < nl; ++i) {
        const double h = ladder[i + 1] - ladder[i];
        lw[i] += h;       // 0.5 h times the factor 2 for y < 0
        lw[i + 1] += h;
    }

    auto overlap = [&](const std::array<double, 3>& y) {
        if (settings.torus_window) return std::pow(L, m);
        double o = 1.0;
        for (int j = 0; j < m; ++j) o *= std::max(L - std::abs(y[static_cast<std::size_t>(j)]), 0.0);
        return o;
    };

    // orthant node list, excluding the excised ball around the origin
    struct Node {
        std::array<double, 3> y;
        double weight; // overlap times tensor trapezoid weight (mirrors folded in)
    };
    std::vector<Node> nodes;
    double dropped_weight = 0.0; // m = 2 nodes lost to the excised ball
    if (m == 1) {
        for (std::size_t i = 0; i < nl; ++i)
            nodes.push_back({{ladder[i], 0, 0}, lw[i] * overlap({ladder[i], 0, 0})});
    } else {
        for (std::size_t i = 0; i < nl; ++i)
            for (std::size_t j = 0; j < nl; ++j) {
                const std::array<double, 3> y = {ladder[i], ladder[j], 0};
                // axis nodes are shared between two mirrored orthants: the
                // doubling built into lw over-counts them once
                double w = lw[i] * lw[j];
                if (i == 0) w *= 0.5;
                if (j == 0) w *= 0.5;
                if (std::hypot(y[0], y[1]) < r_sing) {
                    dropped_weight += w * overlap(y);
                    continue;
                }
                nodes.push_back({y, w * overlap(y)});
            }
    }

    // per-node intensities: independent work items with their own substreams,
    // reduced in index order afterwards
    std::vector<double> val(nodes.size(), 0.0), se(nodes.size(), 0.0);
    const std::vector<double> v0(static_cast<std::size_t>(m), 0.0);
    parallel_for(nodes.size(), settings.threads, [&](std::size_t i) {
        Rng node_rng = Rng::substream(base_seed, 0xAC, static_cast<std::uint64_t>(i));
        const TwoPointResult r =
            two_point_intensity(spec, m, hbar, nodes[i].y, v0, settings.mc_per_node, node_rng);
        val[i] = r.value;
        se[i] = r.se;
    });

    double excess = 0.0, excess_var = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        excess += nodes[i].weight * (val[i] - rho1 * rho1);
        excess_var += nodes[i].weight * nodes[i].weight * se[i] * se[i];
    }
    // sensitivity of the delta integrand to the rho1 estimate
    double wsum = 0.0;
    for (const auto& n : nodes) wsum += n.weight;
    excess_var += std::pow(2.0 * rho1 * wsum * rho1e.se, 2);

    // excised ball: the rho1^2 part is integrated exactly; |rho2| over the
    // ball is bounded via the measured singularity envelopes on the annulus
    // [r_sing, 10 r_sing] (density ~ C1 |y|^{-m}, conditional det ~ C2 |y|^2)
    double c1 = 0.0, c2 = 0.0;
    int annulus_idx = 0;
    for (double t = r_sing; t <= 10.0 * r_sing; t += 3.0 * r_sing) {
        Rng ann_rng = Rng::substream(base_seed, 0xA11, static_cast<std::uint64_t>(annulus_idx++));
        const JetCovariance jc = jet_pair_covariance(spec, m, hbar, {t, 0, 0});
        const TwoPointResult r = two_point_intensity_core(jc, v0, 4000, ann_rng);
        c1 = std::max(c1, r.density * std::pow(t, m));
        c2 = std::max(c2, r.cond_mean / (t * t));
    }
    c1 *= 2.0;
    c2 *= 2.0;
    // int_{|y| < r_sing} |y|^{2-m} dy: r_sing^2 for m = 1, 2 pi r_sing^3 / 3 for m = 2
    const double ball_kernel = m == 1 ? r_sing * r_sing : 2.0 * kPi * r_sing * r_sing * r_sing / 3.0;
    const double ball_vol = m == 1 ? 2.0 * r_sing : kPi * r_sing * r_sing;
    const double overlap0 = overlap({0, 0, 0});
    // slop from the quadrature cells dropped with the ball (m = 2 only)
    const double drop_slop = dropped_weight * (c1 * c2 * (m == 1 ? r_sing : 1.0) + rho1 * rho1);
    const double ball_rho2_bound = c1 * c2 * overlap0 * ball_kernel + drop_slop;
    const double ball_rho1_exact = rho1 * rho1 * overlap0 * ball_vol;

    SecondMomentResult out;
    out.window = L;
    out.nodes = static_cast<long>(nodes.size());
    out.mean_density = rho1;
    out.mean_density_se = rho1e.se;
    out.mean_count = rho1 * std::pow(L, m);
    out.excision_bound = ball_rho2_bound;
    const double correction = excess - ball_rho1_exact + 0.5 * ball_rho2_bound;
    const double corr_var = excess_var + 0.25 * ball_rho2_bound * ball_rho2_bound;
    // E[Z(Z-1)] = rho1^2 (int overlap) + int overlap * delta, with
    // int overlap = L^{2m} exactly for both window shapes
    out.value = rho1 * rho1 * std::pow(L, 2 * m) + correction;
    out.se = std::sqrt(corr_var + std::pow(2.0 * rho1 * std::pow(L, 2 * m) * rho1e.se, 2));
    if (out.excision_bound > 0.01 * std::max(std::abs(excess), 1e-12))
        throw ToleranceError("excised-ball bound exceeds 1% of the two-point integral");
    // Var = E[Z(Z-1)] + E[Z] - E[Z]^2; the rho1^2 L^{2m} terms cancel exactly
    out.variance = out.mean_count + correction;
    out.variance_se = std::sqrt(corr_var + std::pow(std::pow(L, m) * rho1e.se, 2));
    return out;
}

} // namespace torusfield
