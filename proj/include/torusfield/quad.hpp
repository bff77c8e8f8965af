#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include "torusfield/errors.hpp"

namespace torusfield {
namespace quad {

// 15-point Kronrod extension of 7-point Gauss, used for adaptive 1-D
// integration of the radial moments.
inline constexpr std::array<double, 8> kGk15Nodes = {
    0.991455371120813, 0.949107912342759, 0.864864423359769, 0.741531185599394,
    0.586087235467691, 0.405845151377397, 0.207784955007898, 0.0};
inline constexpr std::array<double, 8> kGk15Weights = {
    0.022935322010529, 0.063092092629979, 0.104790010322250, 0.140653259715525,
    0.169004726639267, 0.190350578064785, 0.204432940075298, 0.209482141084728};
inline constexpr std::array<double, 4> kGauss7Weights = {
    0.129484966168870, 0.279705391489277, 0.381830050505119, 0.417959183673469};

template <typename F>
void gk15(const F& f, double a, double b, double& result, double& err) {
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    double kron = 0.0, gauss = 0.0;
    for (std::size_t i = 0; i < 8; ++i) {
        const double x = kGk15Nodes[i] * h;
        const double fv = (i == 7) ? f(c) : f(c - x) + f(c + x);
        kron += kGk15Weights[i] * fv;
        if (i % 2 == 1) gauss += kGauss7Weights[i / 2] * fv;   // odd Kronrod nodes are the Gauss-7 nodes
    }
    result = kron * h;
    err = std::abs(result - gauss * h);
}

// Adaptive bisection on [a, b] to a relative tolerance.
template <typename F>
double adaptive(const F& f, double a, double b, double rel_tol, double* achieved = nullptr) {
    struct Seg {
        double a, b, val, err;
    };
    std::vector<Seg> segs;
    double v, e;
    gk15(f, a, b, v, e);
    segs.push_back({a, b, v, e});
    for (int iter = 0; iter < 2000; ++iter) {
        double total = 0.0, err_total = 0.0;
        std::size_t worst = 0;
        for (std::size_t i = 0; i < segs.size(); ++i) {
            total += segs[i].val;
            err_total += segs[i].err;
            if (segs[i].err > segs[worst].err) worst = i;
        }
        if (err_total <= rel_tol * std::abs(total) + 1e-300) {
            if (achieved) *achieved = err_total;
            return total;
        }
        const Seg s = segs[worst];
        const double mid = 0.5 * (s.a + s.b);
        Seg left{s.a, mid, 0, 0}, right{mid, s.b, 0, 0};
        gk15(f, left.a, left.b, left.val, left.err);
        gk15(f, right.a, right.b, right.val, right.err);
        segs[worst] = left;
        segs.push_back(right);
    }
    double total = 0.0, err_total = 0.0;
    for (const Seg& s : segs) {
        total += s.val;
        err_total += s.err;
    }
    if (achieved) *achieved = err_total;
    throw QuadratureError("adaptive quadrature did not converge",
                          err_total / (std::abs(total) + 1e-300));
}

// 16-point Gauss-Legendre rule on [-1, 1].
inline constexpr std::array<double, 8> kGl16Nodes = {
    0.0950125098376374, 0.2816035507792589, 0.4580167776572274, 0.6178762444026438,
    0.7554044083550030, 0.8656312023878318, 0.9445750230732326, 0.9894009349916499};
inline constexpr std::array<double, 8> kGl16Weights = {
    0.1894506104550685, 0.1826034150449236, 0.1691565193950025, 0.1495959888165767,
    0.1246289712555339, 0.0951585116824928, 0.0622535239386479, 0.0271524594117541};

// Composite GL16 nodes on [0, length] with `panels` equal panels.
struct Nodes {
    std::vector<double> x;
    std::vector<double> w;
};

inline Nodes composite_gl(double length, int panels) {
    Nodes n;
    n.x.reserve(static_cast<std::size_t>(panels) * 16);
    n.w.reserve(static_cast<std::size_t>(panels) * 16);
    const double h = length / panels;
    for (int p = 0; p < panels; ++p) {
        const double c = (p + 0.5) * h, half = 0.5 * h;
        for (std::size_t i = 0; i < 8; ++i) {
            n.x.push_back(c - kGl16Nodes[i] * half);
            n.w.push_back(kGl16Weights[i] * half);
            n.x.push_back(c + kGl16Nodes[i] * half);
            n.w.push_back(kGl16Weights[i] * half);
        }
    }
    return n;
}

} // namespace quad
} // namespace torusfield
