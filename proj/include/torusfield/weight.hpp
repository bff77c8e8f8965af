#pragma once

#include <cmath>
#include <string>

#include "torusfield/errors.hpp"
#include "torusfield/quad.hpp"

namespace torusfield {

enum class WeightFamily { Gaussian, Bump, Rational };

inline std::string to_string(WeightFamily f) {
    switch (f) {
        case WeightFamily::Gaussian: return "gaussian";
        case WeightFamily::Bump: return "bump";
        case WeightFamily::Rational: return "rational";
    }
    return "?";
}

inline WeightFamily weight_family_from_string(const std::string& s) {
    if (s == "gaussian") return WeightFamily::Gaussian;
    if (s == "bump") return WeightFamily::Bump;
    if (s == "rational") return WeightFamily::Rational;
    throw ConfigError("unknown weight family '" + s + "'");
}

// The spectral weight w: nonnegative, even, rapidly decaying.  Families:
//   gaussian   w(r) = amplitude * exp(-r^2 / (2 scale^2))
//   bump       w(r) = amplitude * exp(1 - 1/(1 - (r/radius)^2)) on [0, radius), 0 beyond
//   rational   w(r) = amplitude * (1 + (r/scale)^2)^{-power}   (Schwartz surrogate)
struct WeightSpec {
    WeightFamily family = WeightFamily::Gaussian;
    double amplitude = 1.0;
    double scale = 1.0;       // gaussian / rational length scale
    double bump_radius = 1.0; // bump support radius
    double rational_power = 8.0;
    double eps_cut = 1e-12;   // frequency cutoff on w(2 pi hbar |k|)
    double trunc_radius = 0.0;// quadrature truncation; 0 = derive at construction
    double moment_rel_tol = 1e-9;

    static WeightSpec gaussian(double scale = 1.0, double amplitude = 1.0) {
        WeightSpec s;
        s.family = WeightFamily::Gaussian;
        s.scale = scale;
        s.amplitude = amplitude;
        s.finalize();
        return s;
    }
    static WeightSpec bump(double radius = 1.0, double amplitude = 1.0) {
        WeightSpec s;
        s.family = WeightFamily::Bump;
        s.bump_radius = radius;
        s.amplitude = amplitude;
        s.finalize();
        return s;
    }
    static WeightSpec rational(double scale = 1.0, double power = 8.0, double amplitude = 1.0) {
        WeightSpec s;
        s.family = WeightFamily::Rational;
        s.scale = scale;
        s.rational_power = power;
        s.amplitude = amplitude;
        s.finalize();
        return s;
    }

    double operator()(double r) const {
        if (r < 0.0) throw Error("negative radius in weight evaluation");
        switch (family) {
            case WeightFamily::Gaussian: {
                const double t = r / scale;
                return amplitude * std::exp(-0.5 * t * t);
            }
            case WeightFamily::Bump: {
                if (r >= bump_radius) return 0.0;
                const double t = r / bump_radius;
                return amplitude * std::exp(1.0 - 1.0 / (1.0 - t * t));
            }
            case WeightFamily::Rational: {
                const double t = r / scale;
                return amplitude * std::pow(1.0 + t * t, -rational_power);
            }
        }
        return 0.0;
    }

    // Picks the truncation radius so that w(r) r^8 (the worst integrand for
    // m <= 3, order <= 6 moments plus headroom) is below 1e-12 beyond it, and
    // verifies the invariant on a grid beyond the radius.
    void finalize() {
        if (family == WeightFamily::Bump) {
            trunc_radius = bump_radius;
            return;
        }
        if (family == WeightFamily::Rational && 2.0 * rational_power < 14.0)
            throw ConfigError("rational weight power too small for order-12 moments");
        double r = 2.0 * scale;
        const double bound = 1e-12 * (amplitude > 0.0 ? amplitude : 1.0);
        while ((*this)(r)*std::pow(r, 8) >= bound && r < 1e6 * scale) r *= 1.25;
        trunc_radius = r;
        for (double t = r; t < 4.0 * r; t += 0.25 * scale)
            if ((*this)(t)*std::pow(t, 8) >= bound)
                throw ConfigError("weight tail check failed beyond truncation radius");
    }
};

inline double eval_weight(const WeightSpec& spec, double r) { return spec(r); }

// I_k(w) = int_0^inf w(r) r^k dr by adaptive quadrature, relative error 1e-9.
inline double radial_moment(const WeightSpec& spec, int k, double* achieved_rel = nullptr) {
    if (k < 0 || k > 12) throw ConfigError("radial moment order must be in [0, 12]");
    double achieved = 0.0;
    const double v = quad::adaptive([&](double r) { return spec(r) * std::pow(r, k); }, 0.0,
                                    spec.trunc_radius, spec.moment_rel_tol, &achieved);
    if (achieved_rel) *achieved_rel = achieved / (std::abs(v) + 1e-300);
    return v;
}

} // namespace torusfield
