#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include "torusfield/errors.hpp"
#include "torusfield/hermite.hpp"
#include "torusfield/linalg.hpp"
#include "torusfield/quad.hpp"
#include "torusfield/weight.hpp"

namespace torusfield {

// Partial derivatives of the covariance V (or its periodization V^hbar) at a
// point, for all multi-indices |alpha| <= max_order.
//
// Convention fixed for the whole project:
//     V(z) = (2 pi)^{-m} \int e^{-i<xi,z>} w(|xi|) dxi.
// Derivatives are evaluated by real quadrature over the positive orthant
// after the parity (cosine/sine) reduction; everything else in the code is
// derived from this convention.
class CovarianceJet {
  public:
    CovarianceJet(int m, double hbar, std::array<double, 3> z, int max_order)
        : m_(m), hbar_(hbar), z_(z), max_order_(max_order),
          values_(static_cast<std::size_t>(rank_size(max_order)), 0.0) {}

    int dim() const { return m_; }
    double hbar() const { return hbar_; }
    int max_order() const { return max_order_; }
    const std::array<double, 3>& point() const { return z_; }

    double at(const MultiIndex& alpha) const { return values_[rank(alpha)]; }
    double at(std::initializer_list<int> alpha) const { return values_[rank(MultiIndex(alpha))]; }
    double& slot(const MultiIndex& alpha) { return values_[rank(alpha)]; }

    double max_abs() const {
        double v = 0.0;
        for (double x : values_) v = std::max(v, std::abs(x));
        return v;
    }

    CovarianceJet& accumulate(const CovarianceJet& other) {
        for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
        return *this;
    }

    // quadrature metadata
    double rel_err = 0.0;      // against node doubling
    double trunc_radius = 0.0;
    double tail_bound = 0.0;   // periodization: outermost shell contribution
    double noise_floor = 0.0;  // roundoff floor of the oscillatory quadrature

  private:
    static std::size_t rank_size(int order) {
        // dense base-(order+1) encoding for up to 3 coordinates
        const std::size_t b = static_cast<std::size_t>(order) + 1;
        return b * b * b;
    }
    std::size_t rank(const MultiIndex& alpha) const {
        const std::size_t b = static_cast<std::size_t>(max_order_) + 1;
        std::size_t r = 0, mult = 1;
        for (std::size_t j = 0; j < alpha.size(); ++j) {
            r += static_cast<std::size_t>(alpha[j]) * mult;
            mult *= b;
        }
        return r;
    }

    int m_;
    double hbar_;
    std::array<double, 3> z_;
    int max_order_;
    std::vector<double> values_;
};

namespace detail {

// One pass of the tensor-product quadrature at a fixed panel count,
// evaluating every |alpha| <= max_order at once.
inline void jet_pass(const WeightSpec& spec, int m, const std::array<double, 3>& z,
                     int max_order, int panels_per_axis, CovarianceJet& out,
                     const std::vector<MultiIndex>& indices, double* abs_mass = nullptr) {
    const double radius = spec.trunc_radius;
    std::array<quad::Nodes, 3> axis;
    for (int j = 0; j < m; ++j) axis[static_cast<std::size_t>(j)] = quad::composite_gl(radius, panels_per_axis);
    const std::size_t nn = axis[0].x.size();

    // per-axis tables: T[j][a][node] = xi^a * (a even ? cos(xi z_j) : sin(xi z_j))
    std::array<std::vector<std::vector<double>>, 3> table;
    for (int j = 0; j < m; ++j) {
        auto& t = table[static_cast<std::size_t>(j)];
        t.assign(static_cast<std::size_t>(max_order) + 1, std::vector<double>(nn));
        for (std::size_t i = 0; i < nn; ++i) {
            const double xi = axis[static_cast<std::size_t>(j)].x[i];
            const double c = std::cos(xi * z[static_cast<std::size_t>(j)]);
            const double s = std::sin(xi * z[static_cast<std::size_t>(j)]);
            double p = 1.0;
            for (int a = 0; a <= max_order; ++a) {
                t[static_cast<std::size_t>(a)][i] = p * (a % 2 == 0 ? c : s);
                p *= xi;
            }
        }
    }

    // per-axis bound max(1, xi^max_order) for the roundoff-floor estimate
    std::array<std::vector<double>, 3> bound;
    for (int j = 0; j < m; ++j) {
        auto& bj = bound[static_cast<std::size_t>(j)];
        bj.resize(nn);
        for (std::size_t i = 0; i < nn; ++i)
            bj[i] = std::max(1.0, std::pow(axis[static_cast<std::size_t>(j)].x[i], max_order));
    }

    std::vector<double> acc(indices.size(), 0.0);
    double mass = 0.0;
    const auto& ax0 = axis[0];
    if (m == 1) {
        for (std::size_t i = 0; i < nn; ++i) {
            const double wv = ax0.w[i] * spec(ax0.x[i]);
            mass += wv * bound[0][i];
            for (std::size_t k = 0; k < indices.size(); ++k)
                acc[k] += wv * table[0][static_cast<std::size_t>(indices[k][0])][i];
        }
    } else if (m == 2) {
        const auto& ax1 = axis[1];
        for (std::size_t i0 = 0; i0 < nn; ++i0) {
            const double x0 = ax0.x[i0], w0 = ax0.w[i0];
            for (std::size_t i1 = 0; i1 < nn; ++i1) {
                const double r = std::sqrt(x0 * x0 + ax1.x[i1] * ax1.x[i1]);
                const double wv = w0 * ax1.w[i1] * spec(r);
                if (wv == 0.0) continue;
                mass += wv * bound[0][i0] * bound[1][i1];
                for (std::size_t k = 0; k < indices.size(); ++k)
                    acc[k] += wv * table[0][static_cast<std::size_t>(indices[k][0])][i0] *
                              table[1][static_cast<std::size_t>(indices[k][1])][i1];
            }
        }
    } else {
        const auto& ax1 = axis[1];
        const auto& ax2 = axis[2];
        for (std::size_t i0 = 0; i0 < nn; ++i0) {
            const double x0 = ax0.x[i0];
            for (std::size_t i1 = 0; i1 < nn; ++i1) {
                const double r01 = x0 * x0 + ax1.x[i1] * ax1.x[i1];
                const double w01 = ax0.w[i0] * ax1.w[i1];
                for (std::size_t i2 = 0; i2 < nn; ++i2) {
                    const double r = std::sqrt(r01 + ax2.x[i2] * ax2.x[i2]);
                    const double wv = w01 * ax2.w[i2] * spec(r);
                    if (wv == 0.0) continue;
                    mass += wv * bound[0][i0] * bound[1][i1] * bound[2][i2];
                    for (std::size_t k = 0; k < indices.size(); ++k)
                        acc[k] += wv * table[0][static_cast<std::size_t>(indices[k][0])][i0] *
                                  table[1][static_cast<std::size_t>(indices[k][1])][i1] *
                                  table[2][static_cast<std::size_t>(indices[k][2])][i2];
                }
            }
        }
    }

    const double front = std::pow(2.0 / (2.0 * 3.14159265358979323846), m);
    if (abs_mass) *abs_mass = front * mass;
    for (std::size_t k = 0; k < indices.size(); ++k) {
        const MultiIndex& a = indices[k];
        int odd = 0, total = 0;
        for (int v : a) {
            total += v;
            odd += v % 2;
        }
        const double sign = ((total + odd) / 2) % 2 == 0 ? 1.0 : -1.0;
        out.slot(a) = front * sign * acc[k];
    }
}

inline int panels_for(const WeightSpec& spec, int m, const std::array<double, 3>& z) {
    double zmax = 0.0;
    for (int j = 0; j < m; ++j) zmax = std::max(zmax, std::abs(z[static_cast<std::size_t>(j)]));
    // ~2.5 oscillation periods per 16-point panel, with a smooth-integrand floor
    const double periods = spec.trunc_radius * zmax / (2.0 * 3.14159265358979323846);
    return std::max(3, static_cast<int>(std::ceil(periods / 2.5)) + 2);
}

} // namespace detail

// d^alpha V(z) for all |alpha| <= max_order, validated against node doubling
// to relative error 1e-8.
inline CovarianceJet covariance_jet(const WeightSpec& spec, int m, std::array<double, 3> z,
                                    int max_order) {
    if (m < 1 || m > 3) throw ConfigError("covariance_jet: dimension must be 1, 2 or 3");
    if (max_order < 0 || max_order > 6) throw ConfigError("covariance_jet: order must be <= 6");
    const auto indices = multi_indices_up_to(m, max_order);
    int panels = detail::panels_for(spec, m, z);
    CovarianceJet coarse(m, 0.0, z, max_order), fine(m, 0.0, z, max_order);
    detail::jet_pass(spec, m, z, max_order, panels, coarse, indices);
    double last_rel = 0.0;
    for (int attempt = 0; attempt < 4; ++attempt) {
        double mass = 0.0;
        detail::jet_pass(spec, m, z, max_order, panels * 2, fine, indices, &mass);
        double diff = 0.0;
        for (const auto& a : indices) diff = std::max(diff, std::abs(coarse.at(a) - fine.at(a)));
        const double scale = std::max(fine.max_abs(), 1e-30);
        // far in the tail of V the true values sink below the roundoff floor
        // of the oscillatory quadrature; do not demand the impossible there
        const double noise_floor = 64.0 * 2.220446049250313e-16 * mass;
        last_rel = diff / scale;
        if (diff <= std::max(1e-8 * scale, noise_floor)) {
            fine.rel_err = last_rel;
            fine.trunc_radius = spec.trunc_radius;
            fine.noise_floor = noise_floor;
            return fine;
        }
        panels *= 2;
        coarse = fine;
    }
    throw QuadratureError("covariance_jet did not converge under node doubling", last_rel);
}

// V^hbar(z) = sum over the lattice of V(z + nu/hbar), same for derivatives.
// The lattice radius starts at `lattice_radius` and grows until the
// outermost shell contributes less than `tail_tol` per entry.
inline CovarianceJet periodized_covariance_jet(const WeightSpec& spec, int m, double hbar,
                                               std::array<double, 3> z, int max_order,
                                               int lattice_radius = 2, double tail_tol = 1e-14,
                                               int max_radius = 6) {
    if (!(hbar > 0.0) || hbar > 0.25) throw ConfigError("periodized jet requires 0 < hbar <= 1/4");
    if (lattice_radius < 1) throw ConfigError("lattice_radius must be >= 1");
    CovarianceJet total(m, hbar, z, max_order);
    total.trunc_radius = spec.trunc_radius;
    const double period = 1.0 / hbar;

    double shell_max = 0.0;
    int radius = 0;
    auto add_shell = [&](int rad) {
        shell_max = 0.0;
        std::array<int, 3> nu = {0, 0, 0};
        auto visit = [&](auto&& self, int pos) -> void {
            if (pos == m) {
                int linf = 0;
                for (int j = 0; j < m; ++j) linf = std::max(linf, std::abs(nu[static_cast<std::size_t>(j)]));
                if (linf != rad) return;
                std::array<double, 3> zz = z;
                for (int j = 0; j < m; ++j) zz[static_cast<std::size_t>(j)] += period * nu[static_cast<std::size_t>(j)];
                const CovarianceJet part = covariance_jet(spec, m, zz, max_order);
                const bool central = rad == 0;
                if (central || part.max_abs() > part.noise_floor) {
                    // image carries signal above the quadrature roundoff
                    shell_max = std::max(shell_max, part.max_abs());
                    total.accumulate(part);
                    total.rel_err = std::max(total.rel_err, part.rel_err);
                } else {
                    // below the floor: adding it would only inject noise
                    total.noise_floor = std::max(total.noise_floor, part.noise_floor);
                }
                return;
            }
            for (int v = -rad; v <= rad; ++v) {
                nu[static_cast<std::size_t>(pos)] = v;
                self(self, pos + 1);
            }
        };
        visit(visit, 0);
    };

    for (radius = 0; radius <= lattice_radius; ++radius) add_shell(radius);
    while (shell_max >= tail_tol) {
        if (radius > max_radius)
            throw LatticeRadiusError("periodization shells do not decay below the tail tolerance");
        add_shell(radius++);
    }
    total.tail_bound = std::max(shell_max, total.noise_floor);
    return total;
}

// Envelope psi^hbar(x): max over |alpha| <= 4 of |d^alpha V^hbar(x)| inside
// the fundamental window |x|_inf <= 1/(2 hbar), zero outside; hbar = 0 means
// plain V with no window.
inline double envelope_psi(const WeightSpec& spec, int m, double hbar, std::array<double, 3> x) {
    if (hbar < 0.0 || hbar > 0.25) throw ConfigError("envelope_psi requires hbar in [0, 1/4]");
    if (hbar > 0.0) {
        for (int j = 0; j < m; ++j)
            if (std::abs(x[static_cast<std::size_t>(j)]) > 0.5 / hbar) return 0.0;
    }
    const CovarianceJet jet = hbar > 0.0 ? periodized_covariance_jet(spec, m, hbar, x, 4)
                                         : covariance_jet(spec, m, x, 4);
    return jet.max_abs();
}

// Derived per-(weight, m) constants used by the Kac-Rice and chaos engines.
struct WeightConstants {
    int m = 0;
    double lambda2 = 0.0;        // -d^2/dz_1^2 V(0) (isotropy: the whole block)
    double psi0 = 0.0;           // envelope at the origin
    double corr_length = 0.0;    // operational decay length of the order-<=4 jet
    double det_neg_2pi_hess = 0.0; // det(-2 pi Hess V(0))
    SymmetricMatrix hess_cov;    // nu(m)-dim covariance of vec(Hess Y(0))
    CovarianceJet origin_jet{1, 0.0, {0, 0, 0}, 6};
};

inline WeightConstants weight_constants(const WeightSpec& spec, int m, double hbar = 0.0,
                                        double psi_threshold = 1e-3) {
    WeightConstants c;
    c.m = m;
    c.origin_jet = hbar > 0.0 ? periodized_covariance_jet(spec, m, hbar, {0, 0, 0}, 6)
                              : covariance_jet(spec, m, {0, 0, 0}, 6);
    MultiIndex d2(static_cast<std::size_t>(m), 0);
    d2[0] = 2;
    c.lambda2 = -c.origin_jet.at(d2);

    // det(-2 pi Hess V(0)) straight from the second-derivative block
    SymmetricMatrix hess(m);
    for (int i = 0; i < m; ++i) {
        for (int j = i; j < m; ++j) {
            MultiIndex a(static_cast<std::size_t>(m), 0);
            a[static_cast<std::size_t>(i)] += 1;
            a[static_cast<std::size_t>(j)] += 1;
            hess.at(i, j) = -2.0 * 3.14159265358979323846 * c.origin_jet.at(a);
        }
    }
    c.det_neg_2pi_hess = det_sym(hess);

    // covariance of the Hessian entries: E[Y_ij Y_kl] = d_i d_j d_k d_l V(0)
    const auto slots = sym_vec_slots(m);
    const int nu = static_cast<int>(slots.size());
    c.hess_cov = SymmetricMatrix(nu);
    for (int a = 0; a < nu; ++a) {
        for (int b = a; b < nu; ++b) {
            MultiIndex idx(static_cast<std::size_t>(m), 0);
            idx[static_cast<std::size_t>(slots[static_cast<std::size_t>(a)].first)] += 1;
            idx[static_cast<std::size_t>(slots[static_cast<std::size_t>(a)].second)] += 1;
            idx[static_cast<std::size_t>(slots[static_cast<std::size_t>(b)].first)] += 1;
            idx[static_cast<std::size_t>(slots[static_cast<std::size_t>(b)].second)] += 1;
            c.hess_cov.at(a, b) = c.origin_jet.at(idx);
        }
    }

    c.psi0 = 0.0;
    for (const auto& a : multi_indices_up_to(m, 4))
        c.psi0 = std::max(c.psi0, std::abs(c.origin_jet.at(a)));

    // operational correlation length: first s (on a 1/4-step grid along e1,
    // plus the diagonal for m >= 2) past which the order-<=4 jet stays below
    // psi_threshold * psi0
    const double thresh = psi_threshold * c.psi0;
    double s = 0.25;
    for (; s < 400.0; s += 0.25) {
        bool quiet = true;
        for (double probe = s; probe <= s + 2.0 && quiet; probe += 0.5) {
            std::array<double, 3> y = {probe, 0.0, 0.0};
            if (envelope_psi(spec, m, 0.0, y) >= thresh) quiet = false;
            if (quiet && m >= 2) {
                const double d = probe / std::sqrt(static_cast<double>(m));
                std::array<double, 3> yd = {d, d, m == 3 ? d : 0.0};
                if (envelope_psi(spec, m, 0.0, yd) >= thresh) quiet = false;
            }
        }
        if (quiet) break;
    }
    c.corr_length = s;
    return c;
}

} // namespace torusfield
