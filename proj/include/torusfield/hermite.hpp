#pragma once

#include <cstdint>
#include <vector>

namespace torusfield {

// Probabilists' Hermite polynomial H_n(x) by the three-term recurrence
// H_{n+1}(x) = x H_n(x) - n H_{n-1}(x).
inline double hermite(int n, double x) {
    if (n == 0) return 1.0;
    double hm = 1.0, h = x;
    for (int k = 1; k < n; ++k) {
        const double next = x * h - static_cast<double>(k) * hm;
        hm = h;
        h = next;
    }
    return h;
}

// H_n(0): zero for odd n, (-1)^r (2r)!/(2^r r!) for n = 2r.
inline double hermite_at_zero(int n) {
    if (n % 2 == 1) return 0.0;
    double v = 1.0;
    for (int k = 1; k < n; k += 2) v *= -static_cast<double>(k); // (-1)^r (2r-1)!!
    return v;
}

using MultiIndex = std::vector<int>;

inline int multi_order(const MultiIndex& a) {
    int s = 0;
    for (int v : a) s += v;
    return s;
}

inline double multi_factorial(const MultiIndex& a) {
    double f = 1.0;
    for (int v : a)
        for (int k = 2; k <= v; ++k) f *= static_cast<double>(k);
    return f;
}

// Product of per-coordinate Hermite values.
inline double hermite_multi(const MultiIndex& alpha, const std::vector<double>& x) {
    double p = 1.0;
    for (std::size_t k = 0; k < alpha.size(); ++k) p *= hermite(alpha[k], x[k]);
    return p;
}

// All multi-indices in N_0^dim with |alpha| = order, graded-lexicographic
// within the grade.
inline std::vector<MultiIndex> multi_indices_of_order(int dim, int order) {
    std::vector<MultiIndex> out;
    MultiIndex cur(static_cast<std::size_t>(dim), 0);
    auto rec = [&](auto&& self, int pos, int remaining) -> void {
        if (pos == dim - 1) {
            cur[static_cast<std::size_t>(pos)] = remaining;
            out.push_back(cur);
            return;
        }
        for (int v = remaining; v >= 0; --v) {
            cur[static_cast<std::size_t>(pos)] = v;
            self(self, pos + 1, remaining - v);
        }
    };
    if (dim > 0) rec(rec, 0, order);
    return out;
}

inline std::vector<MultiIndex> multi_indices_up_to(int dim, int max_order) {
    std::vector<MultiIndex> out;
    for (int q = 0; q <= max_order; ++q) {
        auto grade = multi_indices_of_order(dim, q);
        out.insert(out.end(), grade.begin(), grade.end());
    }
    return out;
}

} // namespace torusfield
