#pragma once

// Weighted-graph data model and the basic operator algebra on it:
// the graph Laplacian, Schrodinger operators H = Delta + V/m, their
// quadratic form, and the ground-state transform identity.
//
// Graphs are finite truncations with an explicit one-layer (or thicker)
// Dirichlet ghost boundary.  Operator values are trusted at interior
// vertices only; functions are extended by zero on the boundary layer
// wherever a Dirichlet condition is implied.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace gcrit {

using Index = std::int64_t;

/// Vertex potential; enters the operator as H f = Delta f + (V/m) f and the
/// quadratic form as sum_x V(x) phi(x)^2.  This pairing makes
/// Q(phi) == sum_x m(x) (H phi)(x) phi(x) an exact rearrangement.
using Potential = std::vector<double>;

/// Real-valued function on the vertex set.
using VertexFunction = std::vector<double>;

class GraphBuilder;

/// Symmetric nonnegative edge weights b over a measure m > 0, plus a
/// boundary mask marking the Dirichlet ghost layer of a truncation.
/// Immutable after construction; all operations on it are pure.
class WeightedGraph {
public:
    Index vertex_count() const { return n_; }
    Index interior_count() const { return interior_count_; }

    std::span<const std::int32_t> neighbors(Index x) const {
        return {adj_.data() + offsets_[x], adj_.data() + offsets_[x + 1]};
    }
    std::span<const double> edge_weights(Index x) const {
        return {w_.data() + offsets_[x], w_.data() + offsets_[x + 1]};
    }
    Index degree(Index x) const { return offsets_[x + 1] - offsets_[x]; }

    /// sum_y b(x,y)
    double weighted_degree(Index x) const {
        double s = 0.0;
        for (double w : edge_weights(x)) s += w;
        return s;
    }

    /// b(x,y); zero when x,y is not an edge.
    double edge_weight(Index x, Index y) const {
        auto nb = neighbors(x);
        auto it = std::lower_bound(nb.begin(), nb.end(), static_cast<std::int32_t>(y));
        if (it == nb.end() || *it != y) return 0.0;
        return w_[offsets_[x] + (it - nb.begin())];
    }

    double measure(Index x) const { return m_[x]; }
    const std::vector<double>& measures() const { return m_; }

    bool is_boundary(Index x) const { return boundary_[x] != 0; }
    bool is_interior(Index x) const { return boundary_[x] == 0; }
    const std::vector<std::uint8_t>& boundary_mask() const { return boundary_; }

    int coord_dim() const { return coord_dim_; }
    std::span<const std::int32_t> coords(Index x) const {
        return {coords_.data() + static_cast<std::size_t>(x) * coord_dim_,
                static_cast<std::size_t>(coord_dim_)};
    }

    /// Euclidean norm of the coordinate label.
    double coord_norm(Index x) const {
        double s = 0.0;
        for (auto c : coords(x)) s += double(c) * double(c);
        return std::sqrt(s);
    }

    /// Visits every unordered edge {x,y}, x < y, once: f(x, y, weight).
    template <class F>
    void for_each_edge(F&& f) const {
        for (Index x = 0; x < n_; ++x) {
            auto nb = neighbors(x);
            auto ws = edge_weights(x);
            for (std::size_t k = 0; k < nb.size(); ++k)
                if (nb[k] > x) f(x, static_cast<Index>(nb[k]), ws[k]);
        }
    }

private:
    friend class GraphBuilder;
    WeightedGraph() = default;

    Index n_ = 0;
    Index interior_count_ = 0;
    int coord_dim_ = 0;
    std::vector<std::int64_t> offsets_;
    std::vector<std::int32_t> adj_;
    std::vector<double> w_;
    std::vector<double> m_;
    std::vector<std::uint8_t> boundary_;
    std::vector<std::int32_t> coords_;
};

/// Accumulates vertices and undirected edges, then finalizes into the
/// immutable CSR form.  Each unordered pair may be added once; weights are
/// expanded symmetrically.
class GraphBuilder {
public:
    GraphBuilder(Index n, int coord_dim)
        : n_(n), coord_dim_(coord_dim) {
        if (n <= 0) throw std::invalid_argument("graph must have at least one vertex");
        if (n > (Index(1) << 31) - 2) throw std::invalid_argument("vertex count exceeds index range");
        m_.assign(static_cast<std::size_t>(n), 1.0);
        boundary_.assign(static_cast<std::size_t>(n), 0);
        coords_.assign(static_cast<std::size_t>(n) * std::max(coord_dim, 0), 0);
    }

    void set_measure(Index x, double m) {
        if (!(m > 0.0) || !std::isfinite(m))
            throw std::invalid_argument("vertex measure must be strictly positive at vertex " + std::to_string(x));
        m_[x] = m;
    }
    void set_boundary(Index x, bool b) { boundary_[x] = b ? 1 : 0; }
    void set_coords(Index x, std::span<const std::int32_t> c) {
        for (int i = 0; i < coord_dim_; ++i) coords_[static_cast<std::size_t>(x) * coord_dim_ + i] = c[i];
    }

    void add_edge(Index x, Index y, double w) {
        if (x < 0 || y < 0 || x >= n_ || y >= n_)
            throw std::invalid_argument("edge endpoint out of range");
        if (x == y) throw std::invalid_argument("self-loops are not allowed (zero diagonal)");
        if (!(w > 0.0) || !std::isfinite(w))
            throw std::invalid_argument("edge weight must be positive and finite");
        if (x > y) std::swap(x, y);
        edges_.push_back({x, y, w});
    }

    /// Hands over a prebuilt symmetric CSR (both directions present, rows
    /// sorted ascending).  For graphs whose edge count makes the edge-list
    /// path too expensive.
    WeightedGraph adopt_csr(std::vector<std::int64_t> offsets, std::vector<std::int32_t> adj,
                            std::vector<double> w, bool check_connected = true) {
        if (static_cast<Index>(offsets.size()) != n_ + 1 || adj.size() != w.size() ||
            offsets.back() != static_cast<std::int64_t>(adj.size()))
            throw std::invalid_argument("adopt_csr: inconsistent CSR arrays");
        WeightedGraph g;
        g.n_ = n_;
        g.coord_dim_ = coord_dim_;
        g.m_ = std::move(m_);
        g.boundary_ = std::move(boundary_);
        g.coords_ = std::move(coords_);
        g.offsets_ = std::move(offsets);
        g.adj_ = std::move(adj);
        g.w_ = std::move(w);
        g.interior_count_ = 0;
        for (Index x = 0; x < n_; ++x)
            if (g.is_interior(x)) ++g.interior_count_;
        if (check_connected) check_interior_connected(g);
        return g;
    }

    /// check_connected: require the interior to be connected through
    /// positive-weight edges (via interior or boundary-adjacent paths is not
    /// enough: paths must stay inside the vertex set, which they do by
    /// construction; boundary vertices may participate as path interior).
    WeightedGraph finalize(bool check_connected = true) {
        std::sort(edges_.begin(), edges_.end(), [](const E& a, const E& b) {
            return a.x != b.x ? a.x < b.x : a.y < b.y;
        });
        for (std::size_t i = 1; i < edges_.size(); ++i)
            if (edges_[i].x == edges_[i - 1].x && edges_[i].y == edges_[i - 1].y)
                throw std::invalid_argument("duplicate edge {" + std::to_string(edges_[i].x) + "," +
                                            std::to_string(edges_[i].y) + "}");

        WeightedGraph g;
        g.n_ = n_;
        g.coord_dim_ = coord_dim_;
        g.m_ = std::move(m_);
        g.boundary_ = std::move(boundary_);
        g.coords_ = std::move(coords_);

        std::vector<std::int64_t> deg(static_cast<std::size_t>(n_) + 1, 0);
        for (const E& e : edges_) { ++deg[e.x + 1]; ++deg[e.y + 1]; }
        for (Index i = 0; i < n_; ++i) deg[i + 1] += deg[i];
        g.offsets_ = deg;
        g.adj_.resize(static_cast<std::size_t>(g.offsets_[n_]));
        g.w_.resize(g.adj_.size());
        std::vector<std::int64_t> cur(g.offsets_.begin(), g.offsets_.end() - 1);
        for (const E& e : edges_) {
            g.adj_[cur[e.x]] = static_cast<std::int32_t>(e.y);
            g.w_[cur[e.x]++] = e.w;
            g.adj_[cur[e.y]] = static_cast<std::int32_t>(e.x);
            g.w_[cur[e.y]++] = e.w;
        }
        // sort each adjacency row (neighbors ascending), carrying weights
        for (Index x = 0; x < n_; ++x) {
            auto b = g.offsets_[x], e = g.offsets_[x + 1];
            std::vector<std::pair<std::int32_t, double>> row;
            row.reserve(static_cast<std::size_t>(e - b));
            for (auto k = b; k < e; ++k) row.emplace_back(g.adj_[k], g.w_[k]);
            std::sort(row.begin(), row.end());
            for (auto k = b; k < e; ++k) { g.adj_[k] = row[k - b].first; g.w_[k] = row[k - b].second; }
        }
        g.interior_count_ = 0;
        for (Index x = 0; x < n_; ++x)
            if (g.is_interior(x)) ++g.interior_count_;

        if (check_connected) check_interior_connected(g);
        return g;
    }

private:
    struct E { Index x, y; double w; };

    static void check_interior_connected(const WeightedGraph& g) {
        Index n = g.vertex_count();
        Index start = -1;
        for (Index x = 0; x < n; ++x)
            if (g.is_interior(x)) { start = x; break; }
        if (start < 0) throw std::invalid_argument("graph has no interior vertices");
        std::vector<std::uint8_t> seen(static_cast<std::size_t>(n), 0);
        std::vector<Index> stack{start};
        seen[start] = 1;
        Index reached = 1;
        while (!stack.empty()) {
            Index x = stack.back();
            stack.pop_back();
            for (auto y : g.neighbors(x)) {
                if (!seen[y] && g.is_interior(y)) {
                    seen[y] = 1;
                    ++reached;
                    stack.push_back(y);
                }
            }
        }
        if (reached != g.interior_count())
            throw std::invalid_argument("interior vertex set is not connected");
    }

    Index n_;
    int coord_dim_;
    std::vector<E> edges_;
    std::vector<double> m_;
    std::vector<std::uint8_t> boundary_;
    std::vector<std::int32_t> coords_;
};

inline void require_same_size(const WeightedGraph& g, const VertexFunction& f, const char* what) {
    if (static_cast<Index>(f.size()) != g.vertex_count())
        throw std::invalid_argument(std::string(what) + ": dimension mismatch (" +
                                    std::to_string(f.size()) + " values for " +
                                    std::to_string(g.vertex_count()) + " vertices)");
}

/// (Delta f)(x) = (1/m(x)) sum_y b(x,y)(f(x) - f(y)), evaluated at every
/// vertex.  Boundary rows see only edges inside the truncation and are not
/// meaningful for the infinite-graph operator.
inline VertexFunction apply_laplacian(const WeightedGraph& g, const VertexFunction& f) {
    require_same_size(g, f, "apply_laplacian");
    Index n = g.vertex_count();
    VertexFunction out(static_cast<std::size_t>(n), 0.0);
    for (Index x = 0; x < n; ++x) {
        auto nb = g.neighbors(x);
        auto ws = g.edge_weights(x);
        double s = 0.0;
        for (std::size_t k = 0; k < nb.size(); ++k) s += ws[k] * (f[x] - f[nb[k]]);
        out[x] = s / g.measure(x);
    }
    return out;
}

/// (H f)(x) = (Delta f)(x) + (V(x)/m(x)) f(x)
inline VertexFunction apply_schrodinger(const WeightedGraph& g, const Potential& V,
                                        const VertexFunction& f) {
    require_same_size(g, f, "apply_schrodinger");
    require_same_size(g, V, "apply_schrodinger potential");
    VertexFunction out = apply_laplacian(g, f);
    for (Index x = 0; x < g.vertex_count(); ++x) out[x] += V[x] / g.measure(x) * f[x];
    return out;
}

inline void require_interior_support(const WeightedGraph& g, const VertexFunction& phi,
                                     const char* what) {
    for (Index x = 0; x < g.vertex_count(); ++x)
        if (g.is_boundary(x) && phi[x] != 0.0)
            throw std::invalid_argument(std::string(what) +
                                        ": function is supported on the boundary layer at vertex " +
                                        std::to_string(x));
}

/// Q(phi) = (1/2) sum_{x,y} b(x,y)(phi(x)-phi(y))^2 + sum_x V(x) phi(x)^2
/// for phi supported in the interior.  The potential term pairs V with
/// phi^2 so that Q(phi) = sum_x m(x) (H phi)(x) phi(x) holds exactly.
inline double quadratic_form(const WeightedGraph& g, const Potential& V,
                             const VertexFunction& phi) {
    require_same_size(g, phi, "quadratic_form");
    require_same_size(g, V, "quadratic_form potential");
    require_interior_support(g, phi, "quadratic_form");
    double s = 0.0;
    g.for_each_edge([&](Index x, Index y, double w) {
        double d = phi[x] - phi[y];
        s += w * d * d;
    });
    for (Index x = 0; x < g.vertex_count(); ++x) s += V[x] * phi[x] * phi[x];
    return s;
}

struct GroundStateTransformCheck {
    double lhs;  // Q(f * phi)
    double rhs;  // (1/2) sum b (f x f) |grad phi|^2 + sum m (f H f) phi^2
};

/// Evaluates both sides of the ground-state transform identity for a
/// strictly positive f and interior-supported phi.  The two sides are exact
/// rearrangements of each other.
inline GroundStateTransformCheck ground_state_transform_check(const WeightedGraph& g,
                                                              const Potential& V,
                                                              const VertexFunction& f,
                                                              const VertexFunction& phi) {
    require_same_size(g, f, "ground_state_transform_check f");
    require_same_size(g, phi, "ground_state_transform_check phi");
    require_interior_support(g, phi, "ground_state_transform_check");
    for (Index x = 0; x < g.vertex_count(); ++x)
        if (!(f[x] > 0.0))
            throw std::invalid_argument("ground_state_transform_check: f must be strictly positive (vertex " +
                                        std::to_string(x) + ")");

    VertexFunction fphi(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) fphi[i] = f[i] * phi[i];
    double lhs = quadratic_form(g, V, fphi);

    double rhs = 0.0;
    g.for_each_edge([&](Index x, Index y, double w) {
        double d = phi[x] - phi[y];
        rhs += w * f[x] * f[y] * d * d;
    });
    VertexFunction Hf = apply_schrodinger(g, V, f);
    for (Index x = 0; x < g.vertex_count(); ++x)
        rhs += g.measure(x) * f[x] * Hf[x] * phi[x] * phi[x];
    return {lhs, rhs};
}

inline VertexFunction pointwise_max(const VertexFunction& u, const VertexFunction& v) {
    if (u.size() != v.size()) throw std::invalid_argument("pointwise_max: dimension mismatch");
    VertexFunction out(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) out[i] = std::max(u[i], v[i]);
    return out;
}

struct EdgeRatioResult {
    double sup = 0.0;      // +inf when some b1-edge has zero b2-weight
    bool finite = true;
    Index worst_x = -1;    // edge attaining the sup (or the offending edge)
    Index worst_y = -1;
};

/// sup over b1-edges {x,y} of b1(x,y)|u(x)||u(y)| / (b2(x,y) v(x) v(y)),
/// the minimal admissible comparison constant between the two edge forms.
inline EdgeRatioResult edge_ratio_sup(const WeightedGraph& b1, const VertexFunction& u,
                                      const WeightedGraph& b2, const VertexFunction& v) {
    if (b1.vertex_count() != b2.vertex_count())
        throw std::invalid_argument("edge_ratio_sup: graphs must share the vertex set");
    require_same_size(b1, u, "edge_ratio_sup u");
    require_same_size(b2, v, "edge_ratio_sup v");
    for (Index x = 0; x < b2.vertex_count(); ++x)
        if (!(v[x] > 0.0))
            throw std::invalid_argument("edge_ratio_sup: v must be strictly positive (vertex " +
                                        std::to_string(x) + ")");
    EdgeRatioResult res;
    b1.for_each_edge([&](Index x, Index y, double w1) {
        double w2 = b2.edge_weight(x, y);
        if (w2 <= 0.0) {
            res.finite = false;
            res.sup = std::numeric_limits<double>::infinity();
            if (res.worst_x < 0) { res.worst_x = x; res.worst_y = y; }
            return;
        }
        if (res.finite) {
            double r = w1 * std::abs(u[x]) * std::abs(u[y]) / (w2 * v[x] * v[y]);
            if (r > res.sup) { res.sup = r; res.worst_x = x; res.worst_y = y; }
        }
    });
    return res;
}

}  // namespace gcrit
