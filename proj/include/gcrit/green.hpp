#pragma once

// Green functions G_alpha of (Delta + alpha) by Dirichlet truncation and
// exhaustion, the alpha -> 0 limit, criticality constants of
// Delta + alpha - C*1_o probed by positive-definiteness bisection, and
// null-sequence energies for the standard cutoff families.

#include <functional>
#include <map>
#include <memory>
#include <unordered_map>

#include "gcrit/builders.hpp"
#include "gcrit/solver.hpp"

namespace gcrit {

/// Green function values on one truncation.  `values` covers all vertices
/// (zero on the Dirichlet layer); the defining equation
///   sum_y b(o,y)(u(o)-u(y)) + alpha m(o) u(o) = 1
/// holds at the root, i.e. (Delta+alpha)u = 1_o/m(o) pointwise.
struct GreenTable {
    std::shared_ptr<const WeightedGraph> graph;
    Index root = 0;
    double alpha = 0.0;
    VertexFunction values;
    int truncation_radius = -1;  // -1 when not radius-parametrized
    bool converged = true;
    double est_error = 0.0;      // exhaustion: sup core change between the last two radii
    double residual_inf = 0.0;
    Index iterations = 0;
};

inline GreenTable green_dirichlet(std::shared_ptr<const WeightedGraph> g, Index root, double alpha,
                                  const SolveOptions& opts = {}, int truncation_radius = -1) {
    if (alpha < 0.0) throw std::invalid_argument("green_dirichlet: alpha must be >= 0");
    if (root < 0 || root >= g->vertex_count()) throw std::invalid_argument("green_dirichlet: root out of range");
    if (g->is_boundary(root)) throw std::invalid_argument("green_dirichlet: root lies on the boundary layer");

    std::vector<double> q(static_cast<std::size_t>(g->vertex_count()));
    for (Index x = 0; x < g->vertex_count(); ++x) q[x] = alpha * g->measure(x);
    InteriorSystem sys = assemble_interior_system(*g, q);
    std::vector<double> b(static_cast<std::size_t>(sys.n), 0.0);
    b[sys.row_of[root]] = 1.0;
    SolveResult sol = spd_solve(sys, b, opts);

    GreenTable t;
    t.graph = std::move(g);
    t.root = root;
    t.alpha = alpha;
    t.truncation_radius = truncation_radius;
    t.residual_inf = sol.residual_inf;
    t.iterations = sol.iterations;
    t.est_error = sol.residual_inf;
    t.values.assign(static_cast<std::size_t>(t.graph->vertex_count()), 0.0);
    for (Index r = 0; r < sys.n; ++r) t.values[sys.vertex_of[r]] = sol.x[r];
    return t;
}

/// Root vertex of a coordinate-labelled model: the vertex with all-zero
/// coordinates.
inline Index find_origin(const WeightedGraph& g) {
    for (Index x = 0; x < g.vertex_count(); ++x) {
        auto c = g.coords(x);
        bool zero = true;
        for (auto v : c)
            if (v != 0) { zero = false; break; }
        if (zero) return x;
    }
    throw std::invalid_argument("model has no origin vertex (all-zero coordinates)");
}

/// Flat table of (coords, value) pairs over a core region, used to compare
/// solutions across truncations of different sizes.
struct CoreTable {
    int coord_dim = 0;
    std::vector<std::int32_t> coords;  // size() * coord_dim
    std::vector<double> values;

    std::size_t size() const { return values.size(); }
    std::span<const std::int32_t> coords_of(std::size_t i) const {
        return {coords.data() + i * coord_dim, static_cast<std::size_t>(coord_dim)};
    }
    std::optional<double> find(std::span<const int> c) const {
        build_index();
        auto it = index_.find(detail::pack_coords(c));
        if (it == index_.end()) return std::nullopt;
        return values[it->second];
    }

private:
    void build_index() const {
        if (!index_.empty() || values.empty()) return;
        std::vector<int> tmp(coord_dim);
        for (std::size_t i = 0; i < size(); ++i) {
            auto c = coords_of(i);
            for (int k = 0; k < coord_dim; ++k) tmp[k] = c[k];
            index_.emplace(detail::pack_coords(std::span<const int>(tmp.data(), coord_dim)), i);
        }
    }
    mutable std::unordered_map<std::uint64_t, std::size_t> index_;
};

/// Restriction of per-vertex values to the coordinate ball
/// max_i |coord_i| <= core_radius.  Coordinates must be unique keys.
inline CoreTable extract_core(const WeightedGraph& g, const VertexFunction& values, int core_radius) {
    require_same_size(g, values, "extract_core");
    CoreTable t;
    t.coord_dim = g.coord_dim();
    for (Index x = 0; x < g.vertex_count(); ++x) {
        auto c = g.coords(x);
        int linf = 0;
        for (auto v : c) linf = std::max(linf, std::abs(int(v)));
        if (linf <= core_radius) {
            t.coords.insert(t.coords.end(), c.begin(), c.end());
            t.values.push_back(values[x]);
        }
    }
    return t;
}

using ModelBuilder = std::function<std::shared_ptr<const WeightedGraph>(int radius)>;

inline ModelBuilder lattice_builder(int d, bool quotient = false) {
    return [d, quotient](int radius) {
        LatticeSpec s{d, radius, TruncationNorm::LInf};
        return std::make_shared<const WeightedGraph>(quotient ? build_lattice_quotient(s) : build_lattice(s));
    };
}

inline ModelBuilder tree_builder(int degree, bool radial = false) {
    return [degree, radial](int radius) {
        TreeSpec s{degree, radius};
        return std::make_shared<const WeightedGraph>(radial ? build_tree_radial(s) : build_regular_tree(s));
    };
}

struct ExhaustionOptions {
    int initial_radius = 8;
    double growth = 1.5;      // radii grow geometrically, rounded up
    int radius_cap = 4096;
    double tol = 1e-8;        // sup-change on the core between consecutive radii
    bool extrapolate = false; // per-vertex Aitken extrapolation over the last three radii
    SolveOptions solve;
};

struct ExhaustionResult {
    GreenTable last;                 // table on the largest truncation
    CoreTable core;                  // raw core values at the largest radius
    CoreTable core_extrapolated;     // filled when options.extrapolate is set
    std::vector<int> radii;
    std::vector<double> changes;     // sup core change per step
    std::vector<double> root_values; // G(o) per radius (growth diagnostics)
    bool converged = false;
    bool diverged = false;           // non-Cauchy trend detected
    bool radius_cap_reached = false;
};

namespace detail {

inline CoreTable aitken_core(const CoreTable& a, const CoreTable& b, const CoreTable& c) {
    // componentwise Aitken delta-squared on three tables with identical keys
    CoreTable out;
    out.coord_dim = c.coord_dim;
    out.coords = c.coords;
    out.values.resize(c.values.size());
    std::vector<int> tmp(c.coord_dim);
    for (std::size_t i = 0; i < c.size(); ++i) {
        auto cc = c.coords_of(i);
        for (int k = 0; k < c.coord_dim; ++k) tmp[k] = cc[k];
        std::span<const int> key(tmp.data(), static_cast<std::size_t>(c.coord_dim));
        double v0 = a.find(key).value();
        double v1 = b.find(key).value();
        double v2 = c.values[i];
        double d1 = v1 - v0, d2 = v2 - v1;
        double den = d2 - d1;
        out.values[i] = (std::abs(den) > 1e-300) ? v2 - d2 * d2 / den : v2;
    }
    return out;
}

inline double core_sup_diff(const CoreTable& prev, const CoreTable& cur) {
    double sup = 0.0;
    std::vector<int> tmp(cur.coord_dim);
    for (std::size_t i = 0; i < cur.size(); ++i) {
        auto cc = cur.coords_of(i);
        for (int k = 0; k < cur.coord_dim; ++k) tmp[k] = cc[k];
        auto v = prev.find(std::span<const int>(tmp.data(), tmp.size()));
        if (v) sup = std::max(sup, std::abs(cur.values[i] - *v));
    }
    return sup;
}

}  // namespace detail

/// Runs green_dirichlet over geometrically increasing radii until the sup
/// change on the core ball drops below tol.  On recurrent models the changes
/// fail to contract; this is detected and reported as divergence, returning
/// the values at the last radius with converged = false.
inline ExhaustionResult green_exhaustion(const ModelBuilder& build, double alpha, int core_radius,
                                         const ExhaustionOptions& opts = {}) {
    if (opts.initial_radius <= core_radius)
        throw std::invalid_argument("green_exhaustion: initial radius must exceed the core radius");
    ExhaustionResult res;
    std::vector<CoreTable> history;
    int radius = opts.initial_radius;
    while (true) {
        auto g = build(radius);
        Index root = find_origin(*g);
        GreenTable t = green_dirichlet(g, root, alpha, opts.solve, radius);
        CoreTable core = extract_core(*g, t.values, core_radius);
        res.radii.push_back(radius);
        res.root_values.push_back(t.values[root]);
        if (!history.empty()) {
            double ch = detail::core_sup_diff(history.back(), core);
            res.changes.push_back(ch);
        }
        history.push_back(std::move(core));
        if (history.size() > 3) history.erase(history.begin());
        res.last = std::move(t);

        std::size_t nc = res.changes.size();
        if (nc >= 1 && res.changes.back() <= opts.tol) {
            res.converged = true;
        } else if (nc >= 3 && res.changes[nc - 1] >= 0.9 * res.changes[nc - 2] &&
                   res.changes[nc - 2] >= 0.9 * res.changes[nc - 3]) {
            res.diverged = true;  // changes not contracting: recurrent-type growth
        }
        if (res.converged || res.diverged) break;
        int next = std::max(radius + 1, int(std::ceil(radius * opts.growth)));
        if (next > opts.radius_cap) { res.radius_cap_reached = true; break; }
        radius = next;
    }
    res.core = history.back();
    res.last.converged = res.converged;
    res.last.est_error = res.changes.empty() ? 0.0 : res.changes.back();
    if (opts.extrapolate && history.size() == 3)
        res.core_extrapolated = detail::aitken_core(history[0], history[1], history[2]);
    return res;
}

struct ZeroLimitResult {
    std::vector<double> alphas;
    std::vector<double> root_values;  // G_alpha(o) per alpha
    CoreTable limit;                  // Aitken-extrapolated core estimate (when Cauchy)
    std::vector<double> changes;      // sup core change per alpha step
    bool diverged = false;
};

/// Pointwise limit of G_alpha as alpha decreases to 0, estimated on the
/// core; declares divergence when the per-step changes fail to contract.
/// `radius_for_alpha` supplies the truncation radius per alpha (larger for
/// smaller alpha, since the decay scale grows like 1/sqrt(alpha)).
/// If `cross_check` is given (an alpha = 0 exhaustion core), a mismatch
/// beyond cross_tol throws: the two routes must agree.
inline ZeroLimitResult green_zero_limit(const ModelBuilder& build, const std::vector<double>& alphas,
                                        int core_radius, const std::function<int(double)>& radius_for_alpha,
                                        const CoreTable* cross_check = nullptr, double cross_tol = 5e-3,
                                        const SolveOptions& solve = {}) {
    if (alphas.size() < 3) throw std::invalid_argument("green_zero_limit: need at least three alphas");
    for (std::size_t i = 1; i < alphas.size(); ++i)
        if (!(alphas[i] < alphas[i - 1]) || !(alphas[i] > 0))
            throw std::invalid_argument("green_zero_limit: alphas must be strictly decreasing and positive");

    ZeroLimitResult res;
    res.alphas = alphas;
    std::vector<CoreTable> history;
    for (double a : alphas) {
        int radius = radius_for_alpha(a);
        auto g = build(radius);
        Index root = find_origin(*g);
        GreenTable t = green_dirichlet(g, root, a, solve, radius);
        res.root_values.push_back(t.values[root]);
        CoreTable core = extract_core(*g, t.values, core_radius);
        if (!history.empty()) res.changes.push_back(detail::core_sup_diff(history.back(), core));
        history.push_back(std::move(core));
        if (history.size() > 3) history.erase(history.begin());
    }
    std::size_t nc = res.changes.size();
    res.diverged = nc >= 2 && res.changes[nc - 1] >= 0.9 * res.changes[nc - 2];
    if (!res.diverged) {
        res.limit = detail::aitken_core(history[history.size() - 3], history[history.size() - 2],
                                        history.back());
        if (cross_check) {
            double sup = 0.0, scale = 0.0;
            std::vector<int> tmp(res.limit.coord_dim);
            for (std::size_t i = 0; i < res.limit.size(); ++i) {
                auto cc = res.limit.coords_of(i);
                for (int k = 0; k < res.limit.coord_dim; ++k) tmp[k] = cc[k];
                auto v = cross_check->find(std::span<const int>(tmp.data(), tmp.size()));
                if (v) {
                    sup = std::max(sup, std::abs(*v - res.limit.values[i]));
                    scale = std::max(scale, std::abs(*v));
                }
            }
            if (sup > cross_tol * std::max(scale, 1e-300))
                throw std::runtime_error("green_zero_limit: limit disagrees with the alpha=0 exhaustion by " +
                                         std::to_string(sup) + " (relative tolerance " + std::to_string(cross_tol) +
                                         "); the two routes must agree");
        }
    }
    return res;
}

// ---------------------------------------------------------------------------
// Criticality constant of Delta + alpha - C * 1_o
// ---------------------------------------------------------------------------

struct CriticalityOptions {
    double bisect_tol = 1e-6;  // relative width of the final bracket
    double bracket_cap = 1e8;
    SolveOptions solve;
};

struct CriticalityProbeResult {
    double alpha = 0.0;
    std::vector<int> radii;
    std::vector<double> cstar;  // best constant per radius; nonincreasing
    double extrapolated = 0.0;  // Aitken delta-squared of the last three
    double bisect_tol = 0.0;
};

namespace detail {

inline bool shifted_positive_definite(const InteriorSystem& base, Index root_row, double c) {
    InteriorSystem s = base;
    s.diag[root_row] -= c;
    return is_positive_definite(s);
}

}  // namespace detail

/// For each radius R: the largest C such that the Dirichlet form of
/// Delta + alpha - C*1_o on the truncation stays positive semidefinite,
/// found by bisection with a Cholesky probe per step.
inline CriticalityProbeResult criticality_constant(const ModelBuilder& build, double alpha,
                                                   const std::vector<int>& radii,
                                                   const CriticalityOptions& opts = {}) {
    if (alpha < 0.0) throw std::invalid_argument("criticality_constant: alpha must be >= 0");
    CriticalityProbeResult res;
    res.alpha = alpha;
    res.bisect_tol = opts.bisect_tol;
    for (int R : radii) {
        auto g = build(R);
        Index root = find_origin(*g);
        std::vector<double> q(static_cast<std::size_t>(g->vertex_count()));
        for (Index x = 0; x < g->vertex_count(); ++x) q[x] = alpha * g->measure(x);
        InteriorSystem sys = assemble_interior_system(*g, q);
        Index rr = sys.row_of[root];
        if (rr < 0) throw std::invalid_argument("criticality_constant: root lies on the boundary layer");

        double lo = 0.0, hi = 1.0;
        while (detail::shifted_positive_definite(sys, rr, hi)) {
            lo = hi;
            hi *= 2.0;
            if (hi > opts.bracket_cap)
                throw std::runtime_error("criticality_constant: bisection bracket failure (C > " +
                                         std::to_string(opts.bracket_cap) + ")");
        }
        while (hi - lo > opts.bisect_tol * std::max(1.0, lo)) {
            double mid = 0.5 * (lo + hi);
            if (detail::shifted_positive_definite(sys, rr, mid))
                lo = mid;
            else
                hi = mid;
        }
        res.radii.push_back(R);
        res.cstar.push_back(lo);
    }
    std::size_t k = res.cstar.size();
    if (k >= 3) {
        double v0 = res.cstar[k - 3], v1 = res.cstar[k - 2], v2 = res.cstar[k - 1];
        double d1 = v1 - v0, d2 = v2 - v1, den = d2 - d1;
        res.extrapolated = std::abs(den) > 1e-300 ? v2 - d2 * d2 / den : v2;
    } else if (k > 0) {
        res.extrapolated = res.cstar.back();
    }
    return res;
}

// ---------------------------------------------------------------------------
// Null-sequence energies
//
// The cutoff profiles live on lattices far too large to materialize, so the
// energies are accumulated by direct summation over the support; the
// summand per unordered edge is (phi(x)-phi(y))^2 (unit weights, V = 0).
// Cross-checked against quadratic_form on materialized truncations in the
// test suite.
// ---------------------------------------------------------------------------

enum class CutoffFamily {
    TentZ1,       // (1 - |x|/n)_+ on Z
    LogCutoffZ2,  // min(1, (log(n^2/|x|)/log n)_+) on Z^2
    TentZ3,       // (1 - |x|/n)_+ on Z^3
};

struct NullSequencePoint {
    long n;
    double energy;
};

namespace detail {

inline double tent_z1_energy(long n) {
    double e = 0.0;
    const double inv = 1.0 / double(n);
    auto phi = [&](long x) { return std::max(0.0, 1.0 - std::abs(double(x)) * inv); };
    for (long x = -n; x < n; ++x) {
        double d = phi(x + 1) - phi(x);
        e += d * d;
    }
    return e;
}

inline double logcut_z2_energy(long n) {
    const long S = n * n;  // support: |x| < n^2
    const double logn = std::log(double(n));
    const double n2 = double(n) * double(n);
    auto phi_r = [&](double r) {
        if (r <= double(n)) return 1.0;
        if (r >= n2) return 0.0;
        return std::log(n2 / r) / logn;
    };
    const long W = S + 1;  // iterate x in [-W, W]
    std::vector<double> row(static_cast<std::size_t>(2 * W + 1)), next(row.size());
    auto fill_row = [&](long y, std::vector<double>& out) {
        const double y2 = double(y) * double(y);
        for (long x = -W; x <= W; ++x)
            out[static_cast<std::size_t>(x + W)] = phi_r(std::sqrt(double(x) * double(x) + y2));
    };
    // rows y and -y coincide; count horizontal edges of row y >= 1 twice,
    // row 0 once, and vertical edges (y, y+1) twice for y >= 0 (the pair
    // (0,-1) mirrors (0,1)).
    double e = 0.0;
    fill_row(0, row);
    for (long x = -W; x < W; ++x) {
        double d = row[x + W + 1] - row[x + W];
        e += d * d;
    }
    for (long y = 0; y < W; ++y) {
        fill_row(y + 1, next);
        double vert = 0.0, horiz = 0.0;
        for (long x = -W; x <= W; ++x) {
            double d = next[x + W] - row[x + W];
            vert += d * d;
        }
        for (long x = -W; x < W; ++x) {
            double d = next[x + W + 1] - next[x + W];
            horiz += d * d;
        }
        e += 2.0 * vert + 2.0 * horiz;
        row.swap(next);
        // beyond the support everything vanishes
        if (y > 0 && y >= S) break;
    }
    return e;
}

inline double tent_z3_energy(long n) {
    const long W = n;  // support: |x| <= n
    const double inv = 1.0 / double(n);
    auto phi = [&](long x, long y, long z) {
        double r = std::sqrt(double(x) * x + double(y) * y + double(z) * z);
        return std::max(0.0, 1.0 - r * inv);
    };
    double e = 0.0;
    for (long z = -W - 1; z <= W; ++z)
        for (long y = -W - 1; y <= W; ++y)
            for (long x = -W - 1; x <= W; ++x) {
                double p = phi(x, y, z);
                double dx = phi(x + 1, y, z) - p;
                double dy = phi(x, y + 1, z) - p;
                double dz = phi(x, y, z + 1) - p;
                e += dx * dx + dy * dy + dz * dz;
            }
    return e;
}

}  // namespace detail

inline std::vector<NullSequencePoint> null_sequence_energy(CutoffFamily family,
                                                           const std::vector<long>& ns) {
    std::vector<NullSequencePoint> out;
    out.reserve(ns.size());
    for (long n : ns) {
        if (n < 2) throw std::invalid_argument("null_sequence_energy: n must be >= 2");
        double e = 0.0;
        switch (family) {
            case CutoffFamily::TentZ1: e = detail::tent_z1_energy(n); break;
            case CutoffFamily::LogCutoffZ2: e = detail::logcut_z2_energy(n); break;
            case CutoffFamily::TentZ3: e = detail::tent_z3_energy(n); break;
        }
        out.push_back({n, e});
    }
    return out;
}

}  // namespace gcrit
