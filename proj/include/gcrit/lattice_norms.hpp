#pragma once

// Direction-dependent lattice norm |x|_a governing resolvent decay on Z^d:
// the decay rate m_a = acosh(1 + d a^2), the norm defined through the root
// r(x) of a monotone scalar equation, the leading-order resolvent value
// C_a(x) = m_a^{(d-3)/2} |x|_a^{-(d-1)/2} exp(-m_a |x|_a), norm-inequality
// sweeps, and decay fits of computed Green tables along lattice rays.
//
// Scaling to resolvents with standard weights: G_alpha ~ C_a / (2d) with
// a^2 = alpha / (2d).

#include <thread>

#include "gcrit/green.hpp"

namespace gcrit {

inline double decay_rate_m(int d, double a2) {
    if (d < 1 || !(a2 > 0.0)) throw std::invalid_argument("decay_rate_m: need d >= 1 and a^2 > 0");
    return std::acosh(1.0 + d * a2);
}

/// Unique positive root r of (1/d) sum_i sqrt(1 + x_i^2 r^2) = 1 + a^2 for
/// x != 0.  The left side is strictly increasing in r from 1, so the root is
/// found by doubling a bracket and finishing with Newton.
inline double solve_r(std::span<const int> x, double a2) {
    const int d = static_cast<int>(x.size());
    if (!(a2 > 0.0)) throw std::invalid_argument("solve_r: a^2 must be positive");
    bool all_zero = true;
    for (int c : x)
        if (c != 0) { all_zero = false; break; }
    if (all_zero) throw std::invalid_argument("solve_r: x must be nonzero");

    auto F = [&](double r) {
        double s = 0.0;
        for (int c : x) {
            double t = double(c) * r;
            s += std::sqrt(1.0 + t * t);
        }
        return s / d - (1.0 + a2);
    };
    auto dF = [&](double r) {
        double s = 0.0;
        for (int c : x) {
            double c2 = double(c) * double(c);
            s += c2 * r / std::sqrt(1.0 + c2 * r * r);
        }
        return s / d;
    };

    double lo = 0.0, hi = 1.0;
    while (F(hi) < 0.0) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e30) throw std::runtime_error("solve_r: bracket failure");
    }
    while (hi - lo > 1e-3 * hi) {
        double mid = 0.5 * (lo + hi);
        (F(mid) < 0.0 ? lo : hi) = mid;
    }
    double r = 0.5 * (lo + hi);
    for (int it = 0; it < 60; ++it) {
        double step = F(r) / dF(r);
        r -= step;
        if (std::abs(step) <= 1e-16 * r) break;
    }
    return r;
}

struct LatticeNormEval {
    std::vector<int> x;
    int d = 0;
    double a2 = 0.0;
    double r = 0.0;          // root of the defining equation (0 for x = 0)
    double norm_a = 0.0;     // |x|_a
    double m_a = 0.0;        // acosh(1 + d a^2)
    double log_asymptotic = 0.0;  // log C_a(x); meaningful for x != 0

    double asymptotic() const { return std::exp(log_asymptotic); }
};

/// Full evaluation record: r(x), |x|_a = (1/m_a) sum_i x_i asinh(x_i r(x)),
/// and the leading resolvent term in log space.  |0|_a = 0 by convention;
/// the asymptotic value is undefined at x = 0.
inline LatticeNormEval norm_a(std::span<const int> x, double a2) {
    LatticeNormEval ev;
    ev.x.assign(x.begin(), x.end());
    ev.d = static_cast<int>(x.size());
    ev.a2 = a2;
    ev.m_a = decay_rate_m(ev.d, a2);
    bool all_zero = true;
    for (int c : x)
        if (c != 0) { all_zero = false; break; }
    if (all_zero) {
        ev.r = 0.0;
        ev.norm_a = 0.0;
        ev.log_asymptotic = std::numeric_limits<double>::quiet_NaN();
        return ev;
    }
    ev.r = solve_r(x, a2);
    double s = 0.0;
    for (int c : x) s += double(c) * std::asinh(double(c) * ev.r);
    ev.norm_a = s / ev.m_a;
    ev.log_asymptotic = 0.5 * (ev.d - 3) * std::log(ev.m_a) - 0.5 * (ev.d - 1) * std::log(ev.norm_a) -
                        ev.m_a * ev.norm_a;
    return ev;
}

/// Leading-order resolvent value C_a(x); throws at x = 0.  Evaluated in log
/// space; use norm_a(...).log_asymptotic when the exponential underflows.
inline double asymptotic_resolvent(std::span<const int> x, double a2) {
    LatticeNormEval ev = norm_a(x, a2);
    if (ev.norm_a == 0.0) throw std::invalid_argument("asymptotic_resolvent: undefined at x = 0");
    return ev.asymptotic();
}

// ---------------------------------------------------------------------------
// Norm inequality sweep:
//   |x| <= |x|_a <= ||x||_1           (all a > 0)
//   m_a |x|_a <= sqrt(2 a^2 d) |x|    (a^2 < 2)
//   |n e_j|_a = |n|                   (axis identity)
// ---------------------------------------------------------------------------

struct NormLemmaReport {
    long points_checked = 0;
    long violations = 0;
    double min_slack_lower = std::numeric_limits<double>::infinity();   // |x|_a - |x|
    double min_slack_upper = std::numeric_limits<double>::infinity();   // ||x||_1 - |x|_a
    double min_slack_l2bound = std::numeric_limits<double>::infinity(); // sqrt(2a^2 d)|x| - m_a |x|_a
    double max_axis_error = 0.0;  // max over axis points of ||n e_j|_a - |n|| / |n|
    std::vector<std::string> violation_notes;  // capped
};

namespace detail {

inline int thread_count_from_env() {
    if (const char* env = std::getenv("GCRIT_THREADS")) {
        int t = std::atoi(env);
        if (t >= 1) return t;
    }
    return 1;
}

}  // namespace detail

/// Exhaustive sweep over 0 != x in the box ||x||_inf <= radius for every
/// dimension up to d_max and every a^2 in the grid.  The two-sided norm
/// inequality is checked everywhere; the sqrt(2 a^2 d)|x| bound only where
/// a^2 < 2.  Any violation indicates an implementation bug.
inline NormLemmaReport verify_norm_lemmas(int d_max, int radius, const std::vector<double>& a2_grid,
                                          double slack_tol = 1e-9) {
    if (d_max < 1 || radius < 1) throw std::invalid_argument("verify_norm_lemmas: bad sweep bounds");
    NormLemmaReport rep;
    const int threads = detail::thread_count_from_env();

    for (int d = 1; d <= d_max; ++d) {
        const long long side = 2LL * radius + 1;
        long long box = 1;
        for (int i = 0; i < d; ++i) box *= side;

        std::vector<NormLemmaReport> partial(static_cast<std::size_t>(threads));
        auto work = [&](int tid) {
            NormLemmaReport& p = partial[tid];
            std::vector<int> x(d);
            for (long long bi = tid; bi < box; bi += threads) {
                long long t = bi;
                bool zero = true;
                for (int i = d - 1; i >= 0; --i) {
                    x[i] = int(t % side) - radius;
                    t /= side;
                    if (x[i] != 0) zero = false;
                }
                if (zero) continue;
                double l1 = 0.0, l2sq = 0.0;
                int nonzero = 0, last_nz = -1;
                for (int i = 0; i < d; ++i) {
                    l1 += std::abs(x[i]);
                    l2sq += double(x[i]) * double(x[i]);
                    if (x[i] != 0) { ++nonzero; last_nz = i; }
                }
                double l2 = std::sqrt(l2sq);
                for (double a2 : a2_grid) {
                    LatticeNormEval ev = norm_a(std::span<const int>(x.data(), x.size()), a2);
                    ++p.points_checked;
                    double s_lo = ev.norm_a - l2;
                    double s_hi = l1 - ev.norm_a;
                    p.min_slack_lower = std::min(p.min_slack_lower, s_lo);
                    p.min_slack_upper = std::min(p.min_slack_upper, s_hi);
                    double scale = std::max(1.0, l1);
                    if (s_lo < -slack_tol * scale || s_hi < -slack_tol * scale) {
                        ++p.violations;
                        if (p.violation_notes.size() < 16)
                            p.violation_notes.push_back("norm bounds violated at d=" + std::to_string(d) +
                                                        " a2=" + std::to_string(a2));
                    }
                    if (a2 < 2.0) {
                        double s_b = std::sqrt(2.0 * a2 * d) * l2 - ev.m_a * ev.norm_a;
                        p.min_slack_l2bound = std::min(p.min_slack_l2bound, s_b);
                        if (s_b < -slack_tol * scale) {
                            ++p.violations;
                            if (p.violation_notes.size() < 16)
                                p.violation_notes.push_back("l2 upper bound violated at d=" + std::to_string(d) +
                                                            " a2=" + std::to_string(a2));
                        }
                    }
                    if (nonzero == 1) {
                        double n = std::abs(double(x[last_nz]));
                        double err = std::abs(ev.norm_a - n) / n;
                        p.max_axis_error = std::max(p.max_axis_error, err);
                        if (err > 1e-12) {
                            ++p.violations;
                            if (p.violation_notes.size() < 16)
                                p.violation_notes.push_back("axis identity violated at d=" + std::to_string(d) +
                                                            " a2=" + std::to_string(a2));
                        }
                    }
                }
            }
        };
        if (threads == 1) {
            work(0);
        } else {
            std::vector<std::thread> pool;
            for (int tid = 0; tid < threads; ++tid) pool.emplace_back(work, tid);
            for (auto& th : pool) th.join();
        }
        for (const auto& p : partial) {
            rep.points_checked += p.points_checked;
            rep.violations += p.violations;
            rep.min_slack_lower = std::min(rep.min_slack_lower, p.min_slack_lower);
            rep.min_slack_upper = std::min(rep.min_slack_upper, p.min_slack_upper);
            rep.min_slack_l2bound = std::min(rep.min_slack_l2bound, p.min_slack_l2bound);
            rep.max_axis_error = std::max(rep.max_axis_error, p.max_axis_error);
            for (const auto& s : p.violation_notes)
                if (rep.violation_notes.size() < 16) rep.violation_notes.push_back(s);
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Decay fit along lattice rays
// ---------------------------------------------------------------------------

enum class RayKind { Axis, Diagonal };

struct RayFit {
    RayKind kind = RayKind::Axis;
    std::vector<int> radii;
    std::vector<double> corrected;  // log G + m_a |x|_a + ((d-1)/2) log |x|_a
    std::vector<double> drifts;     // |corrected[k] - corrected[k-1]|
    double intercept = 0.0;         // mean of the last quarter of the window
    double reference_intercept = 0.0;  // log(m_a^{(d-3)/2} / (2d))
    double max_drift = 0.0;
    double last_drift = 0.0;
};

/// Removes the predicted decay from log G_alpha along a ray and reports the
/// residual ("corrected") sequence; for an exact match it is constant, and
/// the step-to-step drift measures the subleading correction.
inline RayFit asymptotic_fit_ray(const CoreTable& core, int d, double alpha, RayKind kind, int rmin,
                                 int rmax) {
    if (rmax - rmin < 3) throw std::invalid_argument("asymptotic_fit_ray: window too small");
    const double a2 = alpha / (2.0 * d);
    RayFit fit;
    fit.kind = kind;
    const double m = decay_rate_m(d, a2);
    fit.reference_intercept = 0.5 * (d - 3) * std::log(m) - std::log(2.0 * d);
    std::vector<int> x(d, 0);
    for (int r = rmin; r <= rmax; ++r) {
        if (kind == RayKind::Axis) {
            x.assign(d, 0);
            x[0] = r;
        } else {
            x.assign(d, r);
        }
        auto v = core.find(std::span<const int>(x.data(), x.size()));
        if (!v) throw std::invalid_argument("asymptotic_fit_ray: ray point (" + std::to_string(r) +
                                            ") missing from the table; enlarge the core");
        if (!(*v > 0.0)) throw std::runtime_error("asymptotic_fit_ray: nonpositive value on the ray");
        LatticeNormEval ev = norm_a(std::span<const int>(x.data(), x.size()), a2);
        double corrected = std::log(*v) + m * ev.norm_a + 0.5 * (d - 1) * std::log(ev.norm_a);
        fit.radii.push_back(r);
        fit.corrected.push_back(corrected);
    }
    for (std::size_t k = 1; k < fit.corrected.size(); ++k) {
        double dr = std::abs(fit.corrected[k] - fit.corrected[k - 1]);
        fit.drifts.push_back(dr);
        fit.max_drift = std::max(fit.max_drift, dr);
    }
    fit.last_drift = fit.drifts.empty() ? 0.0 : fit.drifts.back();
    std::size_t tail = std::max<std::size_t>(1, fit.corrected.size() / 4);
    double s = 0.0;
    for (std::size_t k = fit.corrected.size() - tail; k < fit.corrected.size(); ++k) s += fit.corrected[k];
    fit.intercept = s / double(tail);
    return fit;
}

/// Least-squares slope of log(value) against log(radius).
inline double loglog_slope(const std::vector<double>& radii, const std::vector<double>& values) {
    if (radii.size() != values.size() || radii.size() < 2)
        throw std::invalid_argument("loglog_slope: need at least two points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = double(radii.size());
    for (std::size_t i = 0; i < radii.size(); ++i) {
        if (!(radii[i] > 0.0) || !(values[i] > 0.0))
            throw std::invalid_argument("loglog_slope: requires positive radii and values");
        double lx = std::log(radii[i]), ly = std::log(values[i]);
        sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace gcrit
