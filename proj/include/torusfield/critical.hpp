#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "torusfield/errors.hpp"
#include "torusfield/field.hpp"
#include "torusfield/linalg.hpp"

namespace torusfield {

struct CriticalPointRecord {
    Vec3 position = {0, 0, 0}; // canonical fundamental domain [0,1)^m
    double value = 0.0;
    double grad_residual = 0.0;
    SymmetricMatrix hessian;
    int morse_index = 0;
    double degeneracy_margin = 0.0; // smallest |eigenvalue| of the Hessian
    bool degenerate_flag = false;   // margin below 1e-10 * ||Hessian||
    std::array<int, 3> cell = {0, 0, 0};
};

struct FinderOptions {
    int scan_per_wavelength = 6; // grid step hbar / this
    int newton_max_iter = 40;
    double dedup_factor = 1e-6;     // dedup radius = this * hbar
    double residual_factor = 1e-8;  // accept threshold = this * grad RMS
    int max_escalations = 2;        // density doublings on invariant failure
    double failure_rate_limit = 0.01;
};

struct FinderDiagnostics {
    long candidates = 0;
    long newton_failures = 0;   // iteration budget exhausted while still moving
    long rejected = 0;          // converged to a nonzero |grad|^2 minimum
    long duplicates_merged = 0;
    long degenerate_flags = 0;
    int escalations = 0;
    long repair_passes = 0;     // m=1 alternation repairs
    double grad_rms = 0.0;
    int grid_nodes_per_axis = 0;
};

struct FinderResult {
    std::vector<CriticalPointRecord> records;
    FinderDiagnostics diag;
};

inline double torus_wrap_unit(double t) {
    t -= std::floor(t);
    if (t >= 1.0) t -= 1.0;
    return t;
}

// signed representative in [-1/2, 1/2)
inline double torus_signed(double t) {
    t -= std::floor(t);
    if (t >= 0.5) t -= 1.0;
    return t;
}

inline double torus_distance(int m, const Vec3& a, const Vec3& b) {
    double d2 = 0.0;
    for (int j = 0; j < m; ++j) {
        const double d = torus_signed(a[static_cast<std::size_t>(j)] - b[static_cast<std::size_t>(j)]);
        d2 += d * d;
    }
    return std::sqrt(d2);
}

// K_m of the cube [-nu, nu]^m: m! (2 nu)^m
inline long bk_upper_bound(int nu, int m) {
    if (nu <= 0 || m < 1) throw ConfigError("bk_upper_bound requires nu >= 1, m >= 1");
    long v = 1;
    for (int k = 2; k <= m; ++k) v *= k;
    for (int j = 0; j < m; ++j) v *= 2L * nu;
    return v;
}

struct MorseCheck {
    bool ok = true;
    long total = 0;
    std::array<long, 4> per_index = {0, 0, 0, 0};
    long euler_sum = 0;
};

inline long binomial(int n, int k) {
    if (k < 0 || k > n) return 0;
    long v = 1;
    for (int i = 1; i <= k; ++i) v = v * (n - k + i) / i;
    return v;
}

// Betti-number lower bounds of the torus plus the vanishing Euler sum.
inline MorseCheck morse_lower_bound_check(const std::vector<CriticalPointRecord>& records, int m) {
    MorseCheck c;
    c.total = static_cast<long>(records.size());
    for (const auto& r : records) {
        c.per_index[static_cast<std::size_t>(r.morse_index)] += 1;
        c.euler_sum += (r.morse_index % 2 == 0) ? 1 : -1;
    }
    if (c.total < (1L << m)) c.ok = false;
    for (int i = 0; i <= m; ++i)
        if (c.per_index[static_cast<std::size_t>(i)] < binomial(m, i)) c.ok = false;
    if (c.euler_sum != 0) c.ok = false;
    return c;
}

namespace detail {

struct NewtonOutcome {
    bool converged = false;
    bool exhausted = false; // still moving when the budget ran out
    Vec3 position = {0, 0, 0};
    double residual = 0.0;
};

inline double grad_norm(int m, const Jet& j) {
    double s = 0.0;
    for (int i = 0; i < m; ++i) s += j.grad[static_cast<std::size_t>(i)] * j.grad[static_cast<std::size_t>(i)];
    return std::sqrt(s);
}

inline NewtonOutcome newton_refine(const FieldSample& sample, Vec3 start, double cell_size,
                                   double accept_residual, int max_iter) {
    const int m = sample.m;
    const double step_cap = cell_size * std::sqrt(static_cast<double>(m));
    // a start whose walk leaves its own neighbourhood is chasing a zero that
    // belongs to another cell's candidate; cut it off as a rejection
    const double wander_limit = 4.0 * cell_size * std::sqrt(static_cast<double>(m));
    Vec3 theta = start;
    NewtonOutcome out;
    Jet jet = eval_jet(sample, theta, 2);
    double gnorm = grad_norm(m, jet);
    int slow_iters = 0; // consecutive iterations with < 1% progress
    for (int iter = 0; iter < max_iter; ++iter) {
        if (torus_distance(m, theta, start) > wander_limit || slow_iters >= 5) {
            out.position = theta;
            out.residual = gnorm;
            return out;
        }
        if (gnorm <= accept_residual) {
            // two polishing steps of undamped Newton for quadratic tail
            for (int polish = 0; polish < 2; ++polish) {
                std::vector<double> a(static_cast<std::size_t>(m) * m), b(static_cast<std::size_t>(m)), s;
                for (int i = 0; i < m; ++i) {
                    b[static_cast<std::size_t>(i)] = -jet.grad[static_cast<std::size_t>(i)];
                    for (int j2 = 0; j2 < m; ++j2)
                        a[static_cast<std::size_t>(i) * m + j2] = jet.hess(i, j2);
                }
                if (!solve_dense(m, a, b, s)) break;
                double smax = 0.0;
                for (double v : s) smax = std::max(smax, std::abs(v));
                if (smax > cell_size) break;
                for (int j2 = 0; j2 < m; ++j2)
                    theta[static_cast<std::size_t>(j2)] =
                        torus_wrap_unit(theta[static_cast<std::size_t>(j2)] + s[static_cast<std::size_t>(j2)]);
                jet = eval_jet(sample, theta, 2);
            }
            out.converged = true;
            out.position = theta;
            out.residual = grad_norm(m, jet);
            return out;
        }
        // Newton step H s = -g (fall back to scaled steepest descent)
        std::vector<double> a(static_cast<std::size_t>(m) * m), b(static_cast<std::size_t>(m)), s;
        for (int i = 0; i < m; ++i) {
            b[static_cast<std::size_t>(i)] = -jet.grad[static_cast<std::size_t>(i)];
            for (int j2 = 0; j2 < m; ++j2)
                a[static_cast<std::size_t>(i) * m + j2] = jet.hess(i, j2);
        }
        if (!solve_dense(m, a, b, s)) {
            s.assign(static_cast<std::size_t>(m), 0.0);
            for (int j2 = 0; j2 < m; ++j2)
                s[static_cast<std::size_t>(j2)] = -jet.grad[static_cast<std::size_t>(j2)] * cell_size / gnorm;
        }
        double smax = 0.0;
        for (double v : s) smax = std::max(smax, std::abs(v));
        if (smax > step_cap)
            for (double& v : s) v *= step_cap / smax;

        // damping on |grad|^2 (Newton direction is always a descent direction
        // for |grad|^2, so halving terminates)
        bool moved = false;
        for (int halve = 0; halve < 10; ++halve) {
            Vec3 trial = theta;
            for (int j2 = 0; j2 < m; ++j2)
                trial[static_cast<std::size_t>(j2)] =
                    torus_wrap_unit(trial[static_cast<std::size_t>(j2)] + s[static_cast<std::size_t>(j2)]);
            const Jet tj = eval_jet(sample, trial, 2);
            const double tn = grad_norm(m, tj);
            if (tn < gnorm) {
                slow_iters = tn > 0.99 * gnorm ? slow_iters + 1 : 0;
                theta = trial;
                jet = tj;
                gnorm = tn;
                moved = true;
                break;
            }
            for (double& v : s) v *= 0.5;
            smax *= 0.5;
        }
        if (!moved) {
            // stalled at a nonzero local minimum of |grad|^2: a legitimate
            // rejection, not a solver failure
            out.exhausted = false;
            out.position = theta;
            out.residual = gnorm;
            return out;
        }
    }
    out.exhausted = gnorm > accept_residual;
    out.position = theta;
    out.residual = gnorm;
    return out;
}

inline CriticalPointRecord classify(const FieldSample& sample, const Vec3& pos,
                                    const std::array<int, 3>& cell) {
    const Jet jet = eval_jet(sample, pos, 2);
    CriticalPointRecord r;
    r.position = pos;
    for (int j = 0; j < sample.m; ++j)
        r.position[static_cast<std::size_t>(j)] = torus_wrap_unit(r.position[static_cast<std::size_t>(j)]);
    r.value = jet.value;
    r.grad_residual = grad_norm(sample.m, jet);
    r.hessian = jet.hess;
    r.cell = cell;
    const EigenSym e = eigen_sym(jet.hess);
    double margin = 1e300, norm = 0.0;
    int neg = 0;
    for (double v : e.values) {
        margin = std::min(margin, std::abs(v));
        norm = std::max(norm, std::abs(v));
        if (v < 0.0) ++neg;
    }
    r.morse_index = neg;
    r.degeneracy_margin = margin;
    r.degenerate_flag = margin < 1e-10 * norm;
    return r;
}

struct Region {
    Vec3 lo = {0, 0, 0};
    Vec3 hi = {1, 1, 1}; // half-open [lo, hi) per coordinate
    bool full = true;
};

inline bool region_contains(int m, const Region& reg, const Vec3& p) {
    if (reg.full) return true;
    for (int j = 0; j < m; ++j) {
        const double t = torus_signed(p[static_cast<std::size_t>(j)] -
                                      0.5 * (reg.lo[static_cast<std::size_t>(j)] + reg.hi[static_cast<std::size_t>(j)]));
        const double half = 0.5 * (reg.hi[static_cast<std::size_t>(j)] - reg.lo[static_cast<std::size_t>(j)]);
        if (t < -half || t >= half) return false;
    }
    return true;
}

inline FinderResult enumerate_once(const FieldSample& sample, const FinderOptions& opt,
                                   int scan_density, const Region& region) {
    const int m = sample.m;
    FinderResult out;
    const int n = std::max(8, static_cast<int>(std::lround(scan_density / sample.hbar)));
    out.diag.grid_nodes_per_axis = n;
    const double h = 1.0 / n;
    const GridEval grid = eval_gradient_grid(sample, n);
    out.diag.grad_rms = grid.grad_rms;
    const double accept = opt.residual_factor * grid.grad_rms;
    const double target = std::min(1e-11 * grid.grad_rms, accept);

    auto node_index = [&](int i0, int i1, int i2) {
        std::size_t idx = static_cast<std::size_t>((i0 % n + n) % n);
        if (m >= 2) idx = idx * static_cast<std::size_t>(n) + static_cast<std::size_t>((i1 % n + n) % n);
        if (m >= 3) idx = idx * static_cast<std::size_t>(n) + static_cast<std::size_t>((i2 % n + n) % n);
        return idx;
    };
    auto grad_at = [&](int i0, int i1, int i2, int comp) {
        return grid.grad[node_index(i0, i1, i2) * static_cast<std::size_t>(m) +
                         static_cast<std::size_t>(comp)];
    };

    // phase 1: flag cells where every gradient component straddles zero, and
    // nodes where |grad|^2 is a local minimum over the 3^m neighbourhood
    struct Candidate {
        Vec3 start;
        std::array<int, 3> cell;
        bool multi; // spray diagonal starts around it
    };
    std::vector<Candidate> cands;
    std::vector<std::uint8_t> sign_cell(grid.grad2.size(), 0);

    const int n1 = m >= 2 ? n : 1;
    const int n2 = m >= 3 ? n : 1;
    for (int i0 = 0; i0 < n; ++i0)
        for (int i1 = 0; i1 < n1; ++i1)
            for (int i2 = 0; i2 < n2; ++i2) {
                bool all_straddle = true;
                for (int comp = 0; comp < m && all_straddle; ++comp) {
                    double lo = 1e300, hi = -1e300;
                    for (int d0 = 0; d0 <= 1; ++d0)
                        for (int d1 = 0; d1 <= (m >= 2 ? 1 : 0); ++d1)
                            for (int d2 = 0; d2 <= (m >= 3 ? 1 : 0); ++d2) {
                                const double v = grad_at(i0 + d0, i1 + d1, i2 + d2, comp);
                                lo = std::min(lo, v);
                                hi = std::max(hi, v);
                            }
                    if (!(lo <= 0.0 && hi >= 0.0)) all_straddle = false;
                }
                if (all_straddle) {
                    sign_cell[node_index(i0, i1, i2)] = 1;
                    Candidate c;
                    c.cell = {i0, i1, i2};
                    c.start = {(i0 + 0.5) * h, m >= 2 ? (i1 + 0.5) * h : 0.0,
                               m >= 3 ? (i2 + 0.5) * h : 0.0};
                    c.multi = false;
                    cands.push_back(c);
                }
            }
    for (int i0 = 0; i0 < n; ++i0)
        for (int i1 = 0; i1 < n1; ++i1)
            for (int i2 = 0; i2 < n2; ++i2) {
                const double v = grid.grad2[node_index(i0, i1, i2)];
                bool is_min = true;
                bool near_sign_cell = false;
                for (int d0 = -1; d0 <= 1 && is_min; ++d0)
                    for (int d1 = -(m >= 2); d1 <= (m >= 2) && is_min; ++d1)
                        for (int d2 = -(m >= 3); d2 <= (m >= 3); ++d2) {
                            if (d0 == 0 && d1 == 0 && d2 == 0) continue;
                            if (grid.grad2[node_index(i0 + d0, i1 + d1, i2 + d2)] < v) {
                                is_min = false;
                                break;
                            }
                        }
                if (!is_min) continue;
                for (int d0 = -1; d0 <= 0 && !near_sign_cell; ++d0)
                    for (int d1 = -(m >= 2); d1 <= 0 && !near_sign_cell; ++d1)
                        for (int d2 = -(m >= 3); d2 <= 0; ++d2)
                            if (sign_cell[node_index(i0 + d0, i1 + d1, i2 + d2)]) {
                                near_sign_cell = true;
                                break;
                            }
                Candidate c;
                c.cell = {i0, i1, i2};
                c.start = {i0 * h, m >= 2 ? i1 * h : 0.0, m >= 3 ? i2 * h : 0.0};
                c.multi = !near_sign_cell; // isolated |grad|^2 dips get the spray
                cands.push_back(c);
            }

    // phase 2: damped Newton from each candidate start
    std::vector<CriticalPointRecord> found;
    auto run_start = [&](const Vec3& start, const std::array<int, 3>& cell) {
        ++out.diag.candidates;
        const NewtonOutcome res =
            newton_refine(sample, start, h, target, opt.newton_max_iter);
        if (res.residual <= accept) {
            found.push_back(classify(sample, res.position, cell));
        } else if (res.exhausted) {
            ++out.diag.newton_failures;
        } else {
            ++out.diag.rejected;
        }
    };
    for (const auto& c : cands) {
        if (!region.full) {
            // restrict work to cells whose center lies in a one-cell margin
            // around the region
            Vec3 center = c.start;
            Region grown = region;
            for (int j = 0; j < m; ++j) {
                grown.lo[static_cast<std::size_t>(j)] -= 2.0 * h;
                grown.hi[static_cast<std::size_t>(j)] += 2.0 * h;
            }
            if (!region_contains(m, grown, center)) continue;
        }
        run_start(c.start, c.cell);
        if (c.multi) {
            for (int mask = 0; mask < (1 << m); ++mask) {
                Vec3 s = c.start;
                for (int j = 0; j < m; ++j)
                    s[static_cast<std::size_t>(j)] = torus_wrap_unit(
                        s[static_cast<std::size_t>(j)] + ((mask >> j) & 1 ? 0.45 : -0.45) * h);
                run_start(s, c.cell);
            }
        }
    }

    // dedup: same point when torus distance < dedup_factor * hbar; keep the
    // smaller residual, break ties by position
    const double radius = opt.dedup_factor * sample.hbar;
    std::sort(found.begin(), found.end(), [](const CriticalPointRecord& a, const CriticalPointRecord& b) {
        if (a.position[0] != b.position[0]) return a.position[0] < b.position[0];
        if (a.position[1] != b.position[1]) return a.position[1] < b.position[1];
        return a.position[2] < b.position[2];
    });
    std::vector<CriticalPointRecord> unique;
    std::vector<bool> dead(found.size(), false);
    for (std::size_t i = 0; i < found.size(); ++i) {
        if (dead[i]) continue;
        CriticalPointRecord best = found[i];
        for (std::size_t j = i + 1; j < found.size(); ++j) {
            if (dead[j]) continue;
            if (torus_distance(m, found[i].position, found[j].position) < radius) {
                ++out.diag.duplicates_merged;
                dead[j] = true;
                if (found[j].grad_residual < best.grad_residual) best = found[j];
            }
        }
        unique.push_back(best);
    }

    for (auto& r : unique)
        if (r.degenerate_flag) ++out.diag.degenerate_flags;
    if (!region.full) {
        std::vector<CriticalPointRecord> in_region;
        for (auto& r : unique)
            if (region_contains(m, region, r.position)) in_region.push_back(r);
        unique.swap(in_region);
    }
    out.records = std::move(unique);
    return out;
}

// m = 1 only: consecutive critical points around the circle alternate
// min/max; a violated pair brackets a missed min-max pair.  Rescan the arc at
// high density and refine.
inline bool repair_alternation(const FieldSample& sample, const FinderOptions& opt,
                               FinderResult& result) {
    if (sample.m != 1 || result.records.size() < 2) return false;
    auto& recs = result.records;
    std::sort(recs.begin(), recs.end(), [](const CriticalPointRecord& a, const CriticalPointRecord& b) {
        return a.position[0] < b.position[0];
    });
    bool repaired_any = false;
    for (int pass = 0; pass < 3; ++pass) {
        bool violation = false;
        const std::size_t nrec = recs.size();
        std::vector<CriticalPointRecord> added;
        for (std::size_t i = 0; i < nrec; ++i) {
            const auto& a = recs[i];
            const auto& b = recs[(i + 1) % nrec];
            if (a.morse_index != b.morse_index) continue;
            violation = true;
            // fine scan of the open arc (a, b)
            double lo = a.position[0];
            double hi = b.position[0];
            if (hi <= lo) hi += 1.0;
            const int fine = 256;
            double prev_g = eval_jet(sample, {lo, 0, 0}, 1).grad[0];
            for (int k = 1; k <= fine; ++k) {
                const double t = lo + (hi - lo) * k / (fine + 1.0);
                const double g = eval_jet(sample, {t, 0, 0}, 1).grad[0];
                if ((g <= 0.0) != (prev_g <= 0.0)) {
                    const NewtonOutcome res = newton_refine(
                        sample, {t, 0, 0}, (hi - lo) / fine,
                        1e-11 * std::max(result.diag.grad_rms, 1e-300), opt.newton_max_iter);
                    if (res.converged) {
                        bool fresh = true;
                        for (const auto& r : recs)
                            if (torus_distance(1, r.position, res.position) <
                                opt.dedup_factor * sample.hbar)
                                fresh = false;
                        for (const auto& r : added)
                            if (torus_distance(1, r.position, res.position) <
                                opt.dedup_factor * sample.hbar)
                                fresh = false;
                        if (fresh) added.push_back(detail::classify(sample, res.position, {0, 0, 0}));
                    }
                }
                prev_g = g;
            }
        }
        if (!violation) break;
        if (added.empty()) break;
        ++result.diag.repair_passes;
        repaired_any = true;
        recs.insert(recs.end(), added.begin(), added.end());
        std::sort(recs.begin(), recs.end(),
                  [](const CriticalPointRecord& x, const CriticalPointRecord& y) {
                      return x.position[0] < y.position[0];
                  });
    }
    return repaired_any;
}

} // namespace detail

// Two-phase enumeration: a uniform grid scan flags cells where the gradient
// components change sign or |grad|^2 dips, then damped Newton refines each
// candidate.  Full-torus runs are verified against the Morse/Euler invariants
// and rerun at doubled density if they fail.
inline FinderResult find_critical_points(const FieldSample& sample, const FinderOptions& opt = {},
                                         const detail::Region& region = {}) {
    if (opt.scan_per_wavelength < 4)
        throw ConfigError("scan_per_wavelength must be at least 4");
    int density = opt.scan_per_wavelength;
    FinderResult result;
    for (int attempt = 0; attempt <= opt.max_escalations; ++attempt) {
        result = detail::enumerate_once(sample, opt, density, region);
        result.diag.escalations = attempt;
        if (sample.m == 1 && region.full) detail::repair_alternation(sample, opt, result);
        const double rate = result.diag.candidates > 0
                                ? static_cast<double>(result.diag.newton_failures) /
                                      static_cast<double>(result.diag.candidates)
                                : 0.0;
        if (region.full) {
            const MorseCheck check = morse_lower_bound_check(result.records, sample.m);
            if (check.ok && rate <= opt.failure_rate_limit) return result;
        } else if (rate <= opt.failure_rate_limit) {
            return result;
        }
        density *= 2;
    }
    const MorseCheck check = morse_lower_bound_check(result.records, sample.m);
    if (region.full && !check.ok)
        throw EnumerationError("enumeration incomplete: Morse/Euler invariants violated after escalation");
    throw EnumerationError("enumeration unreliable: Newton failure rate above limit");
}

// Count of records inside the centered cube of side r, half-open per
// coordinate so disjoint boxes tile exactly.  Records within 1e-10 of the
// boundary are counted and flagged via *boundary_flags.
inline long count_in_box(const std::vector<CriticalPointRecord>& records, int m, double r,
                         long* boundary_flags = nullptr) {
    if (!(r > 0.0) || r > 1.0) throw ConfigError("box side must be in (0, 1]");
    long count = 0, flags = 0;
    for (const auto& rec : records) {
        bool inside = true;
        for (int j = 0; j < m; ++j) {
            const double t = torus_signed(rec.position[static_cast<std::size_t>(j)]);
            if (t < -0.5 * r || t >= 0.5 * r) inside = false;
            if (std::abs(std::abs(t) - 0.5 * r) < 1e-10) ++flags;
        }
        if (inside) ++count;
    }
    if (boundary_flags) *boundary_flags = flags;
    return count;
}

} // namespace torusfield
