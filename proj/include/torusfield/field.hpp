#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "torusfield/errors.hpp"
#include "torusfield/linalg.hpp"
#include "torusfield/rng.hpp"
#include "torusfield/weight.hpp"

namespace torusfield {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

using Vec3 = std::array<double, 3>;

// One synthesized realization of the random Fourier series
//
//   X(theta) = hbar^{m/2} sum_k sqrt(w(2 pi hbar |k|)) (A_k cos(2pi<k,theta>)
//                                                     + B_k sin(2pi<k,theta>))
//
// stored with one (A, B) pair per lattice point in a lexicographic half-space
// plus k = 0; the paired amplitude carries the sqrt(2) so the covariance law
// matches the full-lattice sum exactly.
struct FieldSample {
    int m = 1;
    double hbar = 0.0;
    double eps_cut = 0.0;
    std::uint64_t seed_lo = 0, seed_hi = 0; // provenance: master/substream ids
    std::vector<std::array<int, 3>> freqs;   // k = 0 first, then half-space k
    std::vector<double> amplitude;           // hbar^{m/2} sqrt(w) (x sqrt2 for k != 0)
    std::vector<double> coeff_cos;           // A_k
    std::vector<double> coeff_sin;           // B_k

    std::size_t size() const { return freqs.size(); }
};

// Value / gradient / Hessian (and optionally third derivatives) of a sample
// at one point.
struct Jet {
    int m = 1;
    Vec3 point = {0, 0, 0};
    double value = 0.0;
    Vec3 grad = {0, 0, 0};
    SymmetricMatrix hess;
    std::vector<double> third; // symmetric 3-tensor entries, lexicographic i<=j<=l
    int max_order = 0;
};

namespace detail {

inline int third_tensor_index(int m, int i, int j, int l) {
    // lexicographic enumeration of i <= j <= l
    int idx = 0;
    for (int a = 0; a < m; ++a)
        for (int b = a; b < m; ++b)
            for (int c = b; c < m; ++c) {
                if (a == i && b == j && c == l) return idx;
                ++idx;
            }
    return -1;
}

inline int third_tensor_size(int m) { return m * (m + 1) * (m + 2) / 6; }

} // namespace detail

// Active frequency set: k = 0 plus every half-space k with
// w(2 pi hbar |k|) >= eps_cut.  The half-space is "last nonzero coordinate
// positive", so each pair {k, -k} is stored exactly once.
inline FieldSample build_sample(const WeightSpec& spec, int m, double hbar, Rng rng,
                                long budget = 1000000) {
    if (!(hbar > 0.0) || hbar > 0.25) throw ConfigError("build_sample requires 0 < hbar <= 1/4");
    if (m < 1 || m > 3) throw ConfigError("build_sample requires m in {1,2,3}");
    FieldSample s;
    s.m = m;
    s.hbar = hbar;
    s.eps_cut = spec.eps_cut;

    // radius bound: w(2 pi hbar |k|) >= eps_cut needs |k| <= r_cut
    double r = 1.0;
    while (spec(kTwoPi * hbar * r) >= spec.eps_cut && r < 1e9) r *= 1.25;
    const int kmax = static_cast<int>(std::ceil(r));

    const double amp_scale = std::pow(hbar, 0.5 * m);
    auto push = [&](int k0, int k1, int k2) {
        const double kk = std::sqrt(static_cast<double>(k0) * k0 + static_cast<double>(k1) * k1 +
                                    static_cast<double>(k2) * k2);
        const double w = spec(kTwoPi * hbar * kk);
        const bool zero = (k0 == 0 && k1 == 0 && k2 == 0);
        if (!zero && w < spec.eps_cut) return;
        if (zero && w <= 0.0) return;
        s.freqs.push_back({k0, k1, k2});
        s.amplitude.push_back(amp_scale * std::sqrt(zero ? w : 2.0 * w));
        if (static_cast<long>(s.freqs.size()) > budget)
            throw BudgetError("frequency budget exceeded (hbar too small for this dimension)");
    };

    push(0, 0, 0);
    if (m == 1) {
        for (int k = 1; k <= kmax; ++k) push(k, 0, 0);
    } else if (m == 2) {
        for (int k1 = 1; k1 <= kmax; ++k1) push(k1, 0, 0);
        for (int k1 = -kmax; k1 <= kmax; ++k1)
            for (int k2 = 1; k2 <= kmax; ++k2) push(k1, k2, 0);
    } else {
        for (int k1 = 1; k1 <= kmax; ++k1) push(k1, 0, 0);
        for (int k1 = -kmax; k1 <= kmax; ++k1)
            for (int k2 = 1; k2 <= kmax; ++k2) push(k1, k2, 0);
        for (int k1 = -kmax; k1 <= kmax; ++k1)
            for (int k2 = -kmax; k2 <= kmax; ++k2)
                for (int k3 = 1; k3 <= kmax; ++k3) push(k1, k2, k3);
    }

    s.coeff_cos.resize(s.size());
    s.coeff_sin.resize(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        s.coeff_cos[i] = rng.normal();
        s.coeff_sin[i] = rng.normal();
    }
    return s;
}

// Exact trigonometric-sum evaluation (no interpolation); derivatives are
// termwise with 2 pi k factors and phase rotations.
inline Jet eval_jet(const FieldSample& s, Vec3 theta, int max_order) {
    Jet jet;
    jet.m = s.m;
    jet.point = theta;
    jet.max_order = max_order;
    const int m = s.m;
    if (max_order >= 2) jet.hess = SymmetricMatrix(m);
    if (max_order >= 3) jet.third.assign(static_cast<std::size_t>(detail::third_tensor_size(m)), 0.0);

    for (std::size_t f = 0; f < s.size(); ++f) {
        const auto& k = s.freqs[f];
        double phase = 0.0;
        for (int j = 0; j < m; ++j) phase += k[static_cast<std::size_t>(j)] * theta[static_cast<std::size_t>(j)];
        phase *= kTwoPi;
        const double c = std::cos(phase), sn = std::sin(phase);
        const double a = s.amplitude[f] * s.coeff_cos[f];
        const double b = s.amplitude[f] * s.coeff_sin[f];
        jet.value += a * c + b * sn;
        if (max_order >= 1) {
            const double d1 = -a * sn + b * c; // d/dphase
            for (int j = 0; j < m; ++j)
                jet.grad[static_cast<std::size_t>(j)] += kTwoPi * k[static_cast<std::size_t>(j)] * d1;
        }
        if (max_order >= 2) {
            const double d2 = -(a * c + b * sn);
            for (int i = 0; i < m; ++i)
                for (int j = i; j < m; ++j)
                    jet.hess.at(i, j) += kTwoPi * kTwoPi * k[static_cast<std::size_t>(i)] *
                                         k[static_cast<std::size_t>(j)] * d2;
        }
        if (max_order >= 3) {
            const double d3 = a * sn - b * c;
            int idx = 0;
            for (int i = 0; i < m; ++i)
                for (int j = i; j < m; ++j)
                    for (int l = j; l < m; ++l) {
                        jet.third[static_cast<std::size_t>(idx)] +=
                            kTwoPi * kTwoPi * kTwoPi * k[static_cast<std::size_t>(i)] *
                            k[static_cast<std::size_t>(j)] * k[static_cast<std::size_t>(l)] * d3;
                        ++idx;
                    }
        }
    }
    return jet;
}

// Deterministic covariance realized by the sampler:
//   hbar^m sum_k w(2 pi hbar |k|) cos(2 pi <k, theta' - theta>)
// over the full (symmetrized) active set.
inline double exact_sample_covariance(const FieldSample& s, Vec3 theta, Vec3 theta_prime) {
    double total = 0.0;
    for (std::size_t f = 0; f < s.size(); ++f) {
        double phase = 0.0;
        for (int j = 0; j < s.m; ++j)
            phase += s.freqs[f][static_cast<std::size_t>(j)] *
                     (theta_prime[static_cast<std::size_t>(j)] - theta[static_cast<std::size_t>(j)]);
        // amplitude^2 already carries hbar^m (and the 2 for paired k)
        total += s.amplitude[f] * s.amplitude[f] * std::cos(kTwoPi * phase);
    }
    return total;
}

// Jet of the rescaled field Y(x) = X(hbar x mod Z^m): chain-rule powers of
// hbar on the derivatives.
inline Jet rescaled_jet(const FieldSample& s, Vec3 x, int max_order) {
    Vec3 theta;
    for (int j = 0; j < s.m; ++j) {
        double t = s.hbar * x[static_cast<std::size_t>(j)];
        t -= std::floor(t);
        theta[static_cast<std::size_t>(j)] = t;
    }
    for (int j = s.m; j < 3; ++j) theta[static_cast<std::size_t>(j)] = 0.0;
    Jet jet = eval_jet(s, theta, max_order);
    jet.point = x;
    const double h = s.hbar;
    for (int j = 0; j < s.m; ++j) jet.grad[static_cast<std::size_t>(j)] *= h;
    if (max_order >= 2)
        for (int i = 0; i < s.m; ++i)
            for (int j = i; j < s.m; ++j) jet.hess.at(i, j) *= h * h;
    if (max_order >= 3)
        for (double& t : jet.third) t *= h * h * h;
    return jet;
}

// Batch evaluation of value, gradient and |grad|^2 on the uniform scan grid,
// using per-axis trig tables; shares the termwise weights with eval_jet.
struct GridEval {
    int m = 1;
    int n = 0;                      // nodes per axis
    std::vector<double> grad2;      // |grad|^2 at each node, row-major
    std::vector<double> grad;       // m components per node
    double grad_rms = 0.0;          // RMS of |grad| over the grid
};

inline GridEval eval_gradient_grid(const FieldSample& s, int nodes_per_axis) {
    const int m = s.m;
    const int n = nodes_per_axis;
    GridEval g;
    g.m = m;
    g.n = n;
    std::size_t total = 1;
    for (int j = 0; j < m; ++j) total *= static_cast<std::size_t>(n);
    g.grad2.assign(total, 0.0);
    g.grad.assign(total * static_cast<std::size_t>(m), 0.0);

    // per-axis tables cos(2 pi k x_i), sin(2 pi k x_i) for k in [-kmax, kmax]
    int kmax = 0;
    for (const auto& k : s.freqs)
        for (int j = 0; j < m; ++j) kmax = std::max(kmax, std::abs(k[static_cast<std::size_t>(j)]));
    const int kdim = 2 * kmax + 1;
    std::vector<double> ct(static_cast<std::size_t>(kdim) * n), st(static_cast<std::size_t>(kdim) * n);
    for (int k = -kmax; k <= kmax; ++k) {
        for (int i = 0; i < n; ++i) {
            const double ph = kTwoPi * k * (static_cast<double>(i) / n);
            ct[static_cast<std::size_t>(k + kmax) * n + i] = std::cos(ph);
            st[static_cast<std::size_t>(k + kmax) * n + i] = std::sin(ph);
        }
    }
    auto crow = [&](int k) { return ct.data() + static_cast<std::size_t>(k + kmax) * n; };
    auto srow = [&](int k) { return st.data() + static_cast<std::size_t>(k + kmax) * n; };

    if (m == 1) {
        for (std::size_t f = 0; f < s.size(); ++f) {
            const int k = s.freqs[f][0];
            const double a = s.amplitude[f] * s.coeff_cos[f];
            const double b = s.amplitude[f] * s.coeff_sin[f];
            const double fac = kTwoPi * k;
            const double* cr = crow(k);
            const double* sr = srow(k);
            for (int i = 0; i < n; ++i)
                g.grad[static_cast<std::size_t>(i)] += fac * (-a * sr[i] + b * cr[i]);
        }
        for (int i = 0; i < n; ++i) {
            const double v = g.grad[static_cast<std::size_t>(i)];
            g.grad2[static_cast<std::size_t>(i)] = v * v;
        }
    } else if (m == 2) {
        for (std::size_t f = 0; f < s.size(); ++f) {
            const int k0 = s.freqs[f][0], k1 = s.freqs[f][1];
            const double a = s.amplitude[f] * s.coeff_cos[f];
            const double b = s.amplitude[f] * s.coeff_sin[f];
            const double* c0 = crow(k0);
            const double* s0 = srow(k0);
            const double* c1 = crow(k1);
            const double* s1 = srow(k1);
            for (int i0 = 0; i0 < n; ++i0) {
                const double c0i = c0[i0], s0i = s0[i0];
                double* gp = g.grad.data() + static_cast<std::size_t>(i0) * n * 2;
                for (int i1 = 0; i1 < n; ++i1) {
                    const double c = c0i * c1[i1] - s0i * s1[i1];
                    const double sn = s0i * c1[i1] + c0i * s1[i1];
                    const double d1 = -a * sn + b * c;
                    gp[2 * i1] += kTwoPi * k0 * d1;
                    gp[2 * i1 + 1] += kTwoPi * k1 * d1;
                }
            }
        }
        for (std::size_t i = 0; i < total; ++i) {
            const double gx = g.grad[2 * i], gy = g.grad[2 * i + 1];
            g.grad2[i] = gx * gx + gy * gy;
        }
    } else {
        for (std::size_t f = 0; f < s.size(); ++f) {
            const int k0 = s.freqs[f][0], k1 = s.freqs[f][1], k2 = s.freqs[f][2];
            const double a = s.amplitude[f] * s.coeff_cos[f];
            const double b = s.amplitude[f] * s.coeff_sin[f];
            const double* c0 = crow(k0);
            const double* s0 = srow(k0);
            const double* c1 = crow(k1);
            const double* s1 = srow(k1);
            const double* c2 = crow(k2);
            const double* s2 = srow(k2);
            for (int i0 = 0; i0 < n; ++i0)
                for (int i1 = 0; i1 < n; ++i1) {
                    const double c01 = c0[i0] * c1[i1] - s0[i0] * s1[i1];
                    const double s01 = s0[i0] * c1[i1] + c0[i0] * s1[i1];
                    double* gp = g.grad.data() +
                                 (static_cast<std::size_t>(i0) * n + i1) * static_cast<std::size_t>(n) * 3;
                    for (int i2 = 0; i2 < n; ++i2) {
                        const double c = c01 * c2[i2] - s01 * s2[i2];
                        const double sn = s01 * c2[i2] + c01 * s2[i2];
                        const double d1 = -a * sn + b * c;
                        gp[3 * i2] += kTwoPi * k0 * d1;
                        gp[3 * i2 + 1] += kTwoPi * k1 * d1;
                        gp[3 * i2 + 2] += kTwoPi * k2 * d1;
                    }
                }
        }
        for (std::size_t i = 0; i < total; ++i) {
            double q = 0.0;
            for (int j = 0; j < 3; ++j) q += g.grad[3 * i + static_cast<std::size_t>(j)] *
                                             g.grad[3 * i + static_cast<std::size_t>(j)];
            g.grad2[i] = q;
        }
    }
    double acc = 0.0;
    for (double q : g.grad2) acc += q;
    g.grad_rms = std::sqrt(acc / static_cast<double>(total));
    return g;
}

// ---- plain-text sample dump (reproduction of a single run) ----
//
//   # torusfield sample v1
//   # m=<m> hbar=<hbar> eps_cut=<eps> seed=<lo>:<hi>
//   # columns: k1 .. km amplitude coeff_cos coeff_sin
//   <k1> [<k2> <k3>] <amplitude> <A> <B>

inline void dump_sample(const FieldSample& s, std::ostream& os) {
    char buf[256];
    os << "# torusfield sample v1\n";
    std::snprintf(buf, sizeof buf, "# m=%d hbar=%.17g eps_cut=%.17g seed=%llu:%llu\n", s.m, s.hbar,
                  s.eps_cut, static_cast<unsigned long long>(s.seed_lo),
                  static_cast<unsigned long long>(s.seed_hi));
    os << buf;
    os << "# columns: k1";
    for (int j = 2; j <= s.m; ++j) os << " k" << j;
    os << " amplitude coeff_cos coeff_sin\n";
    for (std::size_t f = 0; f < s.size(); ++f) {
        for (int j = 0; j < s.m; ++j) {
            std::snprintf(buf, sizeof buf, "%d ", s.freqs[f][static_cast<std::size_t>(j)]);
            os << buf;
        }
        std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g\n", s.amplitude[f], s.coeff_cos[f],
                      s.coeff_sin[f]);
        os << buf;
    }
}

inline FieldSample load_sample(std::istream& is) {
    FieldSample s;
    std::string line;
    bool header_seen = false;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            unsigned long long lo = 0, hi = 0;
            int m = 0;
            double hb = 0, ec = 0;
            if (std::sscanf(line.c_str(), "# m=%d hbar=%lg eps_cut=%lg seed=%llu:%llu", &m, &hb,
                            &ec, &lo, &hi) == 5) {
                s.m = m;
                s.hbar = hb;
                s.eps_cut = ec;
                s.seed_lo = lo;
                s.seed_hi = hi;
                header_seen = true;
            }
            continue;
        }
        if (!header_seen) throw ConfigError("sample dump: missing header line");
        std::istringstream ls(line);
        std::array<int, 3> k = {0, 0, 0};
        for (int j = 0; j < s.m; ++j) ls >> k[static_cast<std::size_t>(j)];
        double amp, a, b;
        if (!(ls >> amp >> a >> b)) throw ConfigError("sample dump: bad row '" + line + "'");
        s.freqs.push_back(k);
        s.amplitude.push_back(amp);
        s.coeff_cos.push_back(a);
        s.coeff_sin.push_back(b);
    }
    if (!header_seen) throw ConfigError("sample dump: empty file");
    return s;
}

} // namespace torusfield
