#pragma once

// Dirichlet interior systems and SPD linear algebra.
//
// For a graph with potential-like diagonal weights q, the interior system is
//   A = B + diag(q),   B_xx = sum_y b(x,y) (all neighbors, ghost absorbed),
//                      B_xy = -b(x,y) for interior pairs,
// which is the matrix of the quadratic form restricted to interior-supported
// functions.  A is symmetric, and positive definite whenever the form is.
//
// Solves go through a sparse Cholesky factorization up to a size threshold
// and a Jacobi-preconditioned conjugate gradient beyond it.  Every solve is
// residual-checked.

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <random>

#include "gcrit/graph.hpp"

namespace gcrit {

struct InteriorSystem {
    Index n = 0;                        // number of interior rows
    std::vector<Index> vertex_of;       // row -> graph vertex
    std::vector<Index> row_of;          // graph vertex -> row (or -1)
    std::vector<std::int64_t> offsets;  // CSR over interior x interior (off-diagonal part)
    std::vector<std::int32_t> col;
    std::vector<double> val;            // -b(x,y)
    std::vector<double> diag;           // sum_y b(x,y) + q(x)

    void multiply(const double* x, double* y) const {
        for (Index r = 0; r < n; ++r) {
            double s = diag[r] * x[r];
            for (auto k = offsets[r]; k < offsets[r + 1]; ++k) s += val[k] * x[col[k]];
            y[r] = s;
        }
    }
};

/// q: extra diagonal weight per graph vertex (e.g. alpha*m for resolvents,
/// the potential V for Schrodinger forms).  Pass empty for q = 0.
inline InteriorSystem assemble_interior_system(const WeightedGraph& g, const std::vector<double>& q) {
    if (!q.empty()) require_same_size(g, q, "assemble_interior_system q");
    InteriorSystem s;
    const Index nv = g.vertex_count();
    s.row_of.assign(static_cast<std::size_t>(nv), -1);
    s.vertex_of.reserve(static_cast<std::size_t>(g.interior_count()));
    for (Index x = 0; x < nv; ++x)
        if (g.is_interior(x)) {
            s.row_of[x] = static_cast<Index>(s.vertex_of.size());
            s.vertex_of.push_back(x);
        }
    s.n = static_cast<Index>(s.vertex_of.size());
    if (s.n == 0) throw std::invalid_argument("no interior vertices to solve on");

    s.offsets.assign(static_cast<std::size_t>(s.n) + 1, 0);
    for (Index r = 0; r < s.n; ++r) {
        Index x = s.vertex_of[r];
        std::int64_t cnt = 0;
        for (auto y : g.neighbors(x))
            if (s.row_of[y] >= 0) ++cnt;
        s.offsets[r + 1] = s.offsets[r] + cnt;
    }
    s.col.resize(static_cast<std::size_t>(s.offsets[s.n]));
    s.val.resize(s.col.size());
    s.diag.resize(static_cast<std::size_t>(s.n));
    for (Index r = 0; r < s.n; ++r) {
        Index x = s.vertex_of[r];
        auto nb = g.neighbors(x);
        auto ws = g.edge_weights(x);
        double dsum = 0.0;
        auto k = s.offsets[r];
        for (std::size_t j = 0; j < nb.size(); ++j) {
            dsum += ws[j];
            Index rr = s.row_of[nb[j]];
            if (rr >= 0) {
                s.col[k] = static_cast<std::int32_t>(rr);
                s.val[k] = -ws[j];
                ++k;
            }
        }
        s.diag[r] = dsum + (q.empty() ? 0.0 : q[x]);
    }
    return s;
}

struct SolveOptions {
    Index direct_threshold = 20000;  // use sparse Cholesky up to this many rows ...
    Index direct_nnz_limit = 2000000;  // ... unless the fill-in risk is obvious from the density
    double cg_tol = 1e-13;           // relative residual target
    Index cg_max_iter = 200000;
    double residual_limit = 5e-11;   // hard cap on the final max-norm residual
    // long-double factorization for small systems whose solution spans many
    // orders of magnitude; the componentwise relative accuracy survives the
    // cast back to double
    bool extended_precision = false;
};

struct SolveResult {
    std::vector<double> x;   // interior rows
    double residual_inf = 0; // max |Ax - b|
    Index iterations = 0;
    bool used_direct = false;
};

namespace detail {

inline Eigen::SparseMatrix<double> to_eigen(const InteriorSystem& s) {
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(s.offsets[s.n]) + static_cast<std::size_t>(s.n));
    for (Index r = 0; r < s.n; ++r) {
        trip.emplace_back(int(r), int(r), s.diag[r]);
        for (auto k = s.offsets[r]; k < s.offsets[r + 1]; ++k)
            trip.emplace_back(int(r), int(s.col[k]), s.val[k]);
    }
    Eigen::SparseMatrix<double> A(int(s.n), int(s.n));
    A.setFromTriplets(trip.begin(), trip.end());
    return A;
}

inline Index jacobi_cg(const InteriorSystem& s, const std::vector<double>& b, std::vector<double>& x,
                       double tol, Index max_iter) {
    const Index n = s.n;
    std::vector<double> r(n), z(n), p(n), Ap(n);
    if (x.empty()) x.assign(static_cast<std::size_t>(n), 0.0);
    s.multiply(x.data(), Ap.data());
    double bnorm = 0.0;
    for (Index i = 0; i < n; ++i) {
        r[i] = b[i] - Ap[i];
        bnorm += b[i] * b[i];
    }
    bnorm = std::sqrt(bnorm);
    if (bnorm == 0.0) { x.assign(static_cast<std::size_t>(n), 0.0); return 0; }
    double rz = 0.0;
    for (Index i = 0; i < n; ++i) {
        z[i] = r[i] / s.diag[i];
        p[i] = z[i];
        rz += r[i] * z[i];
    }
    Index it = 0;
    for (; it < max_iter; ++it) {
        double rn = 0.0;
        for (Index i = 0; i < n; ++i) rn += r[i] * r[i];
        if (std::sqrt(rn) <= tol * bnorm) break;
        s.multiply(p.data(), Ap.data());
        double pAp = 0.0;
        for (Index i = 0; i < n; ++i) pAp += p[i] * Ap[i];
        if (!(pAp > 0.0)) break;  // loss of positivity; caller checks residual
        double alpha = rz / pAp;
        for (Index i = 0; i < n; ++i) { x[i] += alpha * p[i]; r[i] -= alpha * Ap[i]; }
        double rz_new = 0.0;
        for (Index i = 0; i < n; ++i) { z[i] = r[i] / s.diag[i]; rz_new += r[i] * z[i]; }
        double beta = rz_new / rz;
        rz = rz_new;
        for (Index i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }
    return it;
}

}  // namespace detail

/// Solves A x = b for the SPD interior system, with a post-solve residual
/// check and one refinement pass if needed.
inline SolveResult spd_solve(const InteriorSystem& s, const std::vector<double>& b,
                             const SolveOptions& opts = {}) {
    if (static_cast<Index>(b.size()) != s.n) throw std::invalid_argument("spd_solve: rhs dimension mismatch");
    SolveResult res;
    res.x.assign(static_cast<std::size_t>(s.n), 0.0);

    if (opts.extended_precision) {
        if (s.n > opts.direct_threshold || s.offsets[s.n] > opts.direct_nnz_limit)
            throw std::invalid_argument("spd_solve: extended precision is limited to direct-solve sizes");
        std::vector<Eigen::Triplet<long double>> trip;
        trip.reserve(static_cast<std::size_t>(s.offsets[s.n] + s.n));
        for (Index r = 0; r < s.n; ++r) {
            trip.emplace_back(int(r), int(r), static_cast<long double>(s.diag[r]));
            for (auto k = s.offsets[r]; k < s.offsets[r + 1]; ++k)
                trip.emplace_back(int(r), int(s.col[k]), static_cast<long double>(s.val[k]));
        }
        using SpL = Eigen::SparseMatrix<long double>;
        SpL A(int(s.n), int(s.n));
        A.setFromTriplets(trip.begin(), trip.end());
        Eigen::SimplicialLLT<SpL> llt(A);
        if (llt.info() != Eigen::Success)
            throw std::runtime_error("spd_solve: sparse Cholesky failed (matrix not positive definite?)");
        Eigen::Matrix<long double, Eigen::Dynamic, 1> bb(s.n);
        for (Index i = 0; i < s.n; ++i) bb[i] = static_cast<long double>(b[i]);
        Eigen::Matrix<long double, Eigen::Dynamic, 1> xx = llt.solve(bb);
        xx += llt.solve((bb - A * xx).eval());
        double rinf0 = 0.0;
        Eigen::Matrix<long double, Eigen::Dynamic, 1> rr = bb - A * xx;
        for (Index i = 0; i < s.n; ++i) {
            res.x[i] = double(xx[i]);
            rinf0 = std::max(rinf0, double(std::abs(rr[i])));
        }
        res.residual_inf = rinf0;
        res.used_direct = true;
        if (res.residual_inf > opts.residual_limit)
            throw std::runtime_error("spd_solve: residual exceeds the solver contract");
        return res;
    }

    if (s.n <= opts.direct_threshold && s.offsets[s.n] <= opts.direct_nnz_limit) {
        Eigen::SparseMatrix<double> A = detail::to_eigen(s);
        Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt(A);
        if (llt.info() != Eigen::Success)
            throw std::runtime_error("spd_solve: sparse Cholesky failed (matrix not positive definite?)");
        Eigen::Map<const Eigen::VectorXd> bb(b.data(), s.n);
        Eigen::VectorXd xx = llt.solve(bb);
        // one step of iterative refinement
        Eigen::VectorXd rr = bb - A * xx;
        xx += llt.solve(rr);
        for (Index i = 0; i < s.n; ++i) res.x[i] = xx[i];
        res.used_direct = true;
    } else {
        res.iterations = detail::jacobi_cg(s, b, res.x, opts.cg_tol, opts.cg_max_iter);
    }

    std::vector<double> Ax(static_cast<std::size_t>(s.n));
    s.multiply(res.x.data(), Ax.data());
    double rinf = 0.0;
    for (Index i = 0; i < s.n; ++i) rinf = std::max(rinf, std::abs(Ax[i] - b[i]));
    res.residual_inf = rinf;
    if (rinf > opts.residual_limit && !res.used_direct) {
        // refinement: solve for the correction
        std::vector<double> r(static_cast<std::size_t>(s.n));
        for (Index i = 0; i < s.n; ++i) r[i] = b[i] - Ax[i];
        std::vector<double> dx;
        res.iterations += detail::jacobi_cg(s, r, dx, opts.cg_tol, opts.cg_max_iter);
        for (Index i = 0; i < s.n; ++i) res.x[i] += dx[i];
        s.multiply(res.x.data(), Ax.data());
        rinf = 0.0;
        for (Index i = 0; i < s.n; ++i) rinf = std::max(rinf, std::abs(Ax[i] - b[i]));
        res.residual_inf = rinf;
    }
    if (res.residual_inf > opts.residual_limit)
        throw std::runtime_error("spd_solve: residual " + std::to_string(res.residual_inf) +
                                 " exceeds the solver contract");
    return res;
}

/// Positive-definiteness probe: attempted sparse Cholesky.  A successful
/// factorization certifies lambda_min > 0 up to roundoff.
inline bool is_positive_definite(const InteriorSystem& s) {
    Eigen::SparseMatrix<double> A = detail::to_eigen(s);
    Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt(A);
    return llt.info() == Eigen::Success;
}

/// Smallest eigenvalue of the interior system: dense solve for small
/// systems, shifted power iteration estimate otherwise.
inline double smallest_eigenvalue_estimate(const InteriorSystem& s) {
    if (s.n <= 2000) {
        Eigen::MatrixXd A = Eigen::MatrixXd(detail::to_eigen(s));
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A, Eigen::EigenvaluesOnly);
        return es.eigenvalues()(0);
    }
    // Gershgorin upper bound c, then power iteration on cI - A
    double c = 0.0;
    for (Index r = 0; r < s.n; ++r) {
        double row = s.diag[r];
        for (auto k = s.offsets[r]; k < s.offsets[r + 1]; ++k) row += std::abs(s.val[k]);
        c = std::max(c, row);
    }
    std::mt19937 rng(12345);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<double> v(static_cast<std::size_t>(s.n)), Av(static_cast<std::size_t>(s.n));
    for (auto& t : v) t = dist(rng);
    double lam = 0.0;
    for (int it = 0; it < 400; ++it) {
        s.multiply(v.data(), Av.data());
        double norm = 0.0;
        for (Index i = 0; i < s.n; ++i) {
            Av[i] = c * v[i] - Av[i];
            norm += Av[i] * Av[i];
        }
        norm = std::sqrt(norm);
        if (norm == 0.0) break;
        double ray = 0.0;
        for (Index i = 0; i < s.n; ++i) {
            double t = Av[i] / norm;
            ray += t * Av[i];
            v[i] = t;
        }
        lam = ray;
    }
    return c - lam;
}

/// Solves H u = -source on the interior with zero boundary values, for
/// H = Delta + V/m with a positive Dirichlet form.  The result satisfies
/// H u <= 0 (a subharmonic function vanishing on the ghost layer).
inline VertexFunction subharmonic_sample(const WeightedGraph& g, const Potential& V,
                                         const VertexFunction& source,
                                         const SolveOptions& opts = {}) {
    require_same_size(g, V, "subharmonic_sample potential");
    require_same_size(g, source, "subharmonic_sample source");
    for (Index x = 0; x < g.vertex_count(); ++x)
        if (source[x] < 0.0)
            throw std::invalid_argument("subharmonic_sample: source must be nonnegative");

    InteriorSystem sys = assemble_interior_system(g, V);
    if (!is_positive_definite(sys)) {
        double lam = smallest_eigenvalue_estimate(sys);
        throw std::invalid_argument(
            "subharmonic_sample: H is not positive on the truncation (smallest eigenvalue estimate " +
            std::to_string(lam) + ")");
    }
    // pointwise H u = -source  <=>  A u = -(m . source) on interior rows
    std::vector<double> b(static_cast<std::size_t>(sys.n));
    for (Index r = 0; r < sys.n; ++r) {
        Index x = sys.vertex_of[r];
        b[r] = -g.measure(x) * source[x];
    }
    SolveResult sol = spd_solve(sys, b, opts);
    VertexFunction u(static_cast<std::size_t>(g.vertex_count()), 0.0);
    for (Index r = 0; r < sys.n; ++r) u[sys.vertex_of[r]] = sol.x[r];
    return u;
}

}  // namespace gcrit
