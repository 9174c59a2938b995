#pragma once

// Adaptive quadrature on finite intervals: Gauss-Kronrod 7-15 with interval
// bisection as the workhorse, and adaptive Simpson as an independent scheme
// for dual-route error control.  Endpoint singularities are handled by the
// callers through explicit substitutions.

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace gcrit {

struct QuadratureResult {
    double value = 0.0;
    double error_estimate = 0.0;
    long evaluations = 0;
    bool converged = true;
};

namespace detail {

// Gauss-Kronrod 7-15 nodes/weights on [-1, 1] (positive half; symmetric)
inline constexpr double kGK15Nodes[8] = {
    0.991455371120813, 0.949107912342759, 0.864864423359769, 0.741531185599394,
    0.586087235467691, 0.405845151377397, 0.207784955007898, 0.000000000000000};
inline constexpr double kGK15Weights[8] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250, 0.140653259715525,
    0.169004726639267, 0.190350578064785, 0.204432940075298, 0.209482141084728};
inline constexpr double kG7Weights[4] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119, 0.417959183673469};

template <class F>
inline void gk15(const F& f, double a, double b, double& value, double& error, long& evals) {
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    double fc = f(c);
    double k = kGK15Weights[7] * fc;
    double g = kG7Weights[3] * fc;
    for (int i = 0; i < 7; ++i) {
        double x = h * kGK15Nodes[i];
        double s = f(c - x) + f(c + x);
        k += kGK15Weights[i] * s;
        if (i % 2 == 1) g += kG7Weights[i / 2] * s;
    }
    evals += 15;
    value = k * h;
    double diff = std::abs(k - g) * std::abs(h);
    error = diff * std::sqrt(diff) * 200.0;  // standard (200 |K-G|)^{3/2} heuristic
    error = std::min(error, diff * 200.0);
    if (error < 1e-320) error = diff;
}

}  // namespace detail

/// Adaptive Gauss-Kronrod on [a,b] to the requested absolute/relative
/// tolerance.
template <class F>
QuadratureResult integrate_gk(const F& f, double a, double b, double abs_tol, double rel_tol,
                              int max_intervals = 4000) {
    struct Seg { double a, b, value, error; };
    QuadratureResult res;
    std::vector<Seg> segs;
    double v, e;
    detail::gk15(f, a, b, v, e, res.evaluations);
    segs.push_back({a, b, v, e});
    double total = v, total_err = e;
    while (int(segs.size()) < max_intervals) {
        if (total_err <= abs_tol + rel_tol * std::abs(total)) break;
        // split the segment with the largest error
        std::size_t worst = 0;
        for (std::size_t i = 1; i < segs.size(); ++i)
            if (segs[i].error > segs[worst].error) worst = i;
        Seg s = segs[worst];
        double mid = 0.5 * (s.a + s.b);
        if (mid <= s.a || mid >= s.b) break;  // interval exhausted at machine precision
        Seg l{s.a, mid, 0, 0}, r{mid, s.b, 0, 0};
        detail::gk15(f, l.a, l.b, l.value, l.error, res.evaluations);
        detail::gk15(f, r.a, r.b, r.value, r.error, res.evaluations);
        total += l.value + r.value - s.value;
        total_err += l.error + r.error - s.error;
        segs[worst] = l;
        segs.push_back(r);
    }
    // recompute totals in a fixed order for reproducibility
    std::sort(segs.begin(), segs.end(), [](const Seg& x, const Seg& y) { return x.a < y.a; });
    total = 0.0;
    total_err = 0.0;
    for (const Seg& s : segs) { total += s.value; total_err += s.error; }
    res.value = total;
    res.error_estimate = total_err;
    res.converged = total_err <= abs_tol + rel_tol * std::abs(total) * 4.0;
    return res;
}

/// Adaptive Simpson on [a,b]; independent of the Gauss-Kronrod route.
template <class F>
QuadratureResult integrate_simpson(const F& f, double a, double b, double tol, int max_depth = 48) {
    QuadratureResult res;
    std::function<double(double, double, double, double, double, double, int)> rec =
        [&](double lo, double hi, double flo, double fmid, double fhi, double eps, int depth) -> double {
        double mid = 0.5 * (lo + hi);
        double lmid = 0.5 * (lo + mid), rmid = 0.5 * (mid + hi);
        double flm = f(lmid), frm = f(rmid);
        res.evaluations += 2;
        double h = hi - lo;
        double whole = h / 6.0 * (flo + 4.0 * fmid + fhi);
        double left = h / 12.0 * (flo + 4.0 * flm + fmid);
        double right = h / 12.0 * (fmid + 4.0 * frm + fhi);
        double delta = left + right - whole;
        if (depth >= max_depth) {
            res.converged = false;
            return left + right + delta / 15.0;
        }
        if (std::abs(delta) <= 15.0 * eps) return left + right + delta / 15.0;
        return rec(lo, mid, flo, flm, fmid, 0.5 * eps, depth + 1) +
               rec(mid, hi, fmid, frm, fhi, 0.5 * eps, depth + 1);
    };
    double fa = f(a), fm = f(0.5 * (a + b)), fb = f(b);
    res.evaluations += 3;
    res.value = rec(a, b, fa, fm, fb, tol, 0);
    res.error_estimate = tol;
    return res;
}

}  // namespace gcrit
