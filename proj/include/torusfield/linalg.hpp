#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "torusfield/errors.hpp"

namespace torusfield {

// Dense symmetric matrix, packed upper triangle.  Dimensions in this project
// never exceed 2(m + m(m+1)/2) <= 24, so everything is O(n^3) without
// apology.
class SymmetricMatrix {
  public:
    SymmetricMatrix() = default;
    explicit SymmetricMatrix(int n) : n_(n), a_(static_cast<std::size_t>(n) * (n + 1) / 2, 0.0) {}

    static SymmetricMatrix identity(int n) {
        SymmetricMatrix m(n);
        for (int i = 0; i < n; ++i) m.at(i, i) = 1.0;
        return m;
    }

    int dim() const { return n_; }

    double& at(int i, int j) { return a_[index(i, j)]; }
    double operator()(int i, int j) const { return a_[index(i, j)]; }

    double max_abs() const {
        double m = 0.0;
        for (double v : a_) m = std::max(m, std::abs(v));
        return m;
    }

    SymmetricMatrix& operator*=(double c) {
        for (double& v : a_) v *= c;
        return *this;
    }

    friend SymmetricMatrix operator-(const SymmetricMatrix& x, const SymmetricMatrix& y) {
        SymmetricMatrix r(x.n_);
        for (std::size_t k = 0; k < r.a_.size(); ++k) r.a_[k] = x.a_[k] - y.a_[k];
        return r;
    }

  private:
    std::size_t index(int i, int j) const {
        if (i > j) std::swap(i, j);
        return static_cast<std::size_t>(i) * n_ - static_cast<std::size_t>(i) * (i - 1) / 2 +
               static_cast<std::size_t>(j - i);
    }

    int n_ = 0;
    std::vector<double> a_;
};

// Lower-triangular Cholesky-type factor with possibly zeroed columns (for
// semidefinite matrices).
struct PsdFactor {
    int n = 0;
    std::vector<double> l;       // row-major dense lower triangle
    double smallest_pivot = 0.0; // before clamping
    int clamped = 0;             // number of pivots clamped to zero

    double at(int i, int j) const { return l[static_cast<std::size_t>(i) * n + j]; }

    // y = L * x
    std::vector<double> apply(const std::vector<double>& x) const {
        std::vector<double> y(static_cast<std::size_t>(n), 0.0);
        for (int i = 0; i < n; ++i) {
            double s = 0.0;
            for (int j = 0; j <= i; ++j) s += at(i, j) * x[static_cast<std::size_t>(j)];
            y[static_cast<std::size_t>(i)] = s;
        }
        return y;
    }

    // Solve L z = x in place (columns with zero pivot get z = 0).
    void forward_solve(std::vector<double>& x) const {
        for (int i = 0; i < n; ++i) {
            double s = x[static_cast<std::size_t>(i)];
            for (int j = 0; j < i; ++j) s -= at(i, j) * x[static_cast<std::size_t>(j)];
            const double d = at(i, i);
            x[static_cast<std::size_t>(i)] = d > 0.0 ? s / d : 0.0;
        }
    }

    // Solve L^T z = x in place.
    void backward_solve(std::vector<double>& x) const {
        for (int i = n - 1; i >= 0; --i) {
            double s = x[static_cast<std::size_t>(i)];
            for (int j = i + 1; j < n; ++j) s -= at(j, i) * x[static_cast<std::size_t>(j)];
            const double d = at(i, i);
            x[static_cast<std::size_t>(i)] = d > 0.0 ? s / d : 0.0;
        }
    }

    // Solve (L L^T) z = x.
    std::vector<double> solve(std::vector<double> x) const {
        forward_solve(x);
        backward_solve(x);
        return x;
    }

    double log_det() const { // of L, i.e. half the log-determinant of M
        double s = 0.0;
        for (int i = 0; i < n; ++i) s += std::log(at(i, i));
        return s;
    }
};

// Cholesky factorization with pivot clamping: pivots in [-tol, 0] with
// tol = 1e-10 * max|M| are treated as exact zeros (the matrix is allowed to
// be semidefinite); anything below -tol raises NotPsdError carrying the
// offending pivot.
inline PsdFactor factor_psd(const SymmetricMatrix& m) {
    const int n = m.dim();
    const double scale = m.max_abs();
    const double tol = 1e-10 * (scale > 0.0 ? scale : 1.0);
    PsdFactor f;
    f.n = n;
    f.l.assign(static_cast<std::size_t>(n) * n, 0.0);
    f.smallest_pivot = scale > 0.0 ? scale : 0.0;
    for (int j = 0; j < n; ++j) {
        double d = m(j, j);
        for (int k = 0; k < j; ++k) d -= f.at(j, k) * f.at(j, k);
        f.smallest_pivot = std::min(f.smallest_pivot, d);
        if (d < -tol) throw NotPsdError(d, j);
        if (d <= tol) {
            ++f.clamped;
            continue; // pivot clamped to zero, column stays zero
        }
        const double root = std::sqrt(d);
        f.l[static_cast<std::size_t>(j) * n + j] = root;
        for (int i = j + 1; i < n; ++i) {
            double s = m(i, j);
            for (int k = 0; k < j; ++k) s -= f.at(i, k) * f.at(j, k);
            f.l[static_cast<std::size_t>(i) * n + j] = s / root;
        }
    }
    return f;
}

// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
// Plenty for n <= 24.
struct EigenSym {
    std::vector<double> values;    // ascending
    std::vector<double> vectors;   // column k = vectors[i*n + k]
    int n = 0;

    double vec(int i, int k) const { return vectors[static_cast<std::size_t>(i) * n + k]; }
};

inline EigenSym eigen_sym(const SymmetricMatrix& m) {
    const int n = m.dim();
    std::vector<double> a(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a[static_cast<std::size_t>(i) * n + j] = m(i, j);
    std::vector<double> v(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i) * n + i] = 1.0;

    auto idx = [n](int i, int j) { return static_cast<std::size_t>(i) * n + j; };
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) off += a[idx(i, j)] * a[idx(i, j)];
        if (off < 1e-30 * (1.0 + m.max_abs() * m.max_abs())) break;
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double apq = a[idx(p, q)];
                if (apq == 0.0) continue;
                const double theta = (a[idx(q, q)] - a[idx(p, p)]) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int k = 0; k < n; ++k) {
                    const double akp = a[idx(k, p)], akq = a[idx(k, q)];
                    a[idx(k, p)] = c * akp - s * akq;
                    a[idx(k, q)] = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    const double apk = a[idx(p, k)], aqk = a[idx(q, k)];
                    a[idx(p, k)] = c * apk - s * aqk;
                    a[idx(q, k)] = s * apk + c * aqk;
                }
                for (int k = 0; k < n; ++k) {
                    const double vkp = v[idx(k, p)], vkq = v[idx(k, q)];
                    v[idx(k, p)] = c * vkp - s * vkq;
                    v[idx(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    EigenSym e;
    e.n = n;
    e.values.resize(static_cast<std::size_t>(n));
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    std::sort(order.begin(), order.end(),
              [&](int x, int y) { return a[idx(x, x)] < a[idx(y, y)]; });
    e.vectors.assign(static_cast<std::size_t>(n) * n, 0.0);
    for (int k = 0; k < n; ++k) {
        e.values[static_cast<std::size_t>(k)] = a[idx(order[static_cast<std::size_t>(k)],
                                                       order[static_cast<std::size_t>(k)])];
        for (int i = 0; i < n; ++i)
            e.vectors[idx(i, k)] = v[idx(i, order[static_cast<std::size_t>(k)])];
    }
    return e;
}

// Symmetric PSD square root (the convention used for the whitening matrices;
// any square root would do for the law, but f-coefficients depend on the
// choice, so it is fixed here).
inline SymmetricMatrix sqrt_psd(const SymmetricMatrix& m) {
    const EigenSym e = eigen_sym(m);
    const int n = m.dim();
    SymmetricMatrix r(n);
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            double s = 0.0;
            for (int k = 0; k < n; ++k) {
                const double lam = std::max(e.values[static_cast<std::size_t>(k)], 0.0);
                s += e.vec(i, k) * e.vec(j, k) * std::sqrt(lam);
            }
            r.at(i, j) = s;
        }
    }
    return r;
}

inline double spectral_norm(const SymmetricMatrix& m) {
    const EigenSym e = eigen_sym(m);
    double r = 0.0;
    for (double v : e.values) r = std::max(r, std::abs(v));
    return r;
}

inline double det_sym(const SymmetricMatrix& a) {
    const int n = a.dim();
    if (n == 1) return a(0, 0);
    if (n == 2) return a(0, 0) * a(1, 1) - a(0, 1) * a(0, 1);
    if (n == 3)
        return a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(1, 2)) -
               a(0, 1) * (a(0, 1) * a(2, 2) - a(1, 2) * a(0, 2)) +
               a(0, 2) * (a(0, 1) * a(1, 2) - a(1, 1) * a(0, 2));
    const EigenSym e = eigen_sym(a);
    double d = 1.0;
    for (double v : e.values) d *= v;
    return d;
}

// Vector <-> symmetric matrix identification used throughout: diagonal
// entries first, then off-diagonals in lexicographic order, no duplication;
// dimension nu(m) = m(m+1)/2.
inline int sym_vec_dim(int m) { return m * (m + 1) / 2; }

inline std::vector<std::pair<int, int>> sym_vec_slots(int m) {
    std::vector<std::pair<int, int>> slots;
    slots.reserve(static_cast<std::size_t>(sym_vec_dim(m)));
    for (int i = 0; i < m; ++i) slots.emplace_back(i, i);
    for (int i = 0; i < m; ++i)
        for (int j = i + 1; j < m; ++j) slots.emplace_back(i, j);
    return slots;
}

inline SymmetricMatrix sym_from_vec(int m, const std::vector<double>& v) {
    SymmetricMatrix a(m);
    const auto slots = sym_vec_slots(m);
    for (std::size_t k = 0; k < slots.size(); ++k)
        a.at(slots[k].first, slots[k].second) = v[k];
    return a;
}

// Solve a small dense symmetric system A x = b by Gaussian elimination with
// partial pivoting (Newton steps, m <= 3).  Returns false if A is singular
// to working precision.
inline bool solve_dense(int n, std::vector<double> a, std::vector<double> b,
                        std::vector<double>& x) {
    auto idx = [n](int i, int j) { return static_cast<std::size_t>(i) * n + j; };
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(a[idx(r, col)]) > std::abs(a[idx(piv, col)])) piv = r;
        if (std::abs(a[idx(piv, col)]) < 1e-300) return false;
        if (piv != col) {
            for (int j = 0; j < n; ++j) std::swap(a[idx(col, j)], a[idx(piv, j)]);
            std::swap(b[static_cast<std::size_t>(col)], b[static_cast<std::size_t>(piv)]);
        }
        for (int r = col + 1; r < n; ++r) {
            const double f = a[idx(r, col)] / a[idx(col, col)];
            for (int j = col; j < n; ++j) a[idx(r, j)] -= f * a[idx(col, j)];
            b[static_cast<std::size_t>(r)] -= f * b[static_cast<std::size_t>(col)];
        }
    }
    x.assign(static_cast<std::size_t>(n), 0.0);
    for (int i = n - 1; i >= 0; --i) {
        double s = b[static_cast<std::size_t>(i)];
        for (int j = i + 1; j < n; ++j) s -= a[idx(i, j)] * x[static_cast<std::size_t>(j)];
        x[static_cast<std::size_t>(i)] = s / a[idx(i, i)];
    }
    return true;
}

} // namespace torusfield
