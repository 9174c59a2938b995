#pragma once

// Constructors for the standard models: Z^d boxes/balls with unit weights,
// regular-tree balls, their symmetry-reduced equivalents, and TSV-file
// graphs.  All emit WeightedGraph truncations with coordinate labels and a
// Dirichlet ghost layer.

#include <array>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <memory>
#include <sstream>
#include <unordered_map>

#include "gcrit/graph.hpp"

namespace gcrit {

enum class TruncationNorm { LInf, L1, L2 };

struct LatticeSpec {
    int d = 1;
    int radius = 2;
    TruncationNorm norm = TruncationNorm::LInf;

    void validate() const {
        if (d < 1) throw std::invalid_argument("lattice dimension must be >= 1");
        if (radius < 2) throw std::invalid_argument("lattice radius must be >= 2");
    }
};

struct TreeSpec {
    int degree = 3;  // constant vertex degree
    int radius = 2;

    void validate() const {
        if (degree < 2) throw std::invalid_argument("tree degree must be >= 2");
        if (radius < 2) throw std::invalid_argument("tree radius must be >= 2");
    }
};

inline constexpr Index kMaxModelVertices = 120'000'000;

namespace detail {

inline long long ipow(long long b, int e) {
    long long r = 1;
    while (e-- > 0) {
        r *= b;
        if (r > (1LL << 60)) throw std::overflow_error("model size overflow");
    }
    return r;
}

inline bool in_truncation(const std::vector<int>& x, const LatticeSpec& spec) {
    long long l1 = 0, l2 = 0, linf = 0;
    for (int c : x) {
        l1 += std::abs(c);
        l2 += 1LL * c * c;
        linf = std::max<long long>(linf, std::abs(c));
    }
    switch (spec.norm) {
        case TruncationNorm::LInf: return linf <= spec.radius;
        case TruncationNorm::L1: return l1 <= spec.radius;
        case TruncationNorm::L2: return l2 <= 1LL * spec.radius * spec.radius;
    }
    return false;
}

}  // namespace detail

/// Lattice points of Z^d with truncation norm <= radius, unit edge weights
/// between nearest neighbors, m = 1.  Vertices with a lattice neighbor
/// outside the truncation form the boundary layer.  Indexing is row-major
/// over the enclosing box, restricted to the truncation.
inline WeightedGraph build_lattice(const LatticeSpec& spec) {
    spec.validate();
    const int d = spec.d, R = spec.radius;
    const long long side = 2LL * R + 1;
    const long long box = detail::ipow(side, d);
    if (box > kMaxModelVertices && spec.norm == TruncationNorm::LInf)
        throw std::invalid_argument("lattice truncation exceeds the vertex budget");

    // enumerate points in row-major order; box_index -> vertex index (or -1)
    std::vector<Index> vid(static_cast<std::size_t>(box), -1);
    std::vector<int> x(d, -R);
    Index n = 0;
    for (long long bi = 0; bi < box; ++bi) {
        long long t = bi;
        for (int i = d - 1; i >= 0; --i) { x[i] = int(t % side) - R; t /= side; }
        if (detail::in_truncation(x, spec)) vid[bi] = n++;
    }
    if (n > kMaxModelVertices) throw std::invalid_argument("lattice truncation exceeds the vertex budget");

    GraphBuilder gb(n, d);
    std::vector<std::int32_t> cc(d);
    for (long long bi = 0; bi < box; ++bi) {
        if (vid[bi] < 0) continue;
        long long t = bi;
        for (int i = d - 1; i >= 0; --i) { x[i] = int(t % side) - R; t /= side; }
        for (int i = 0; i < d; ++i) cc[i] = x[i];
        gb.set_coords(vid[bi], cc);
        bool bd = false;
        for (int i = 0; i < d && !bd; ++i) {
            for (int s : {-1, +1}) {
                x[i] += s;
                bool inside = std::abs(x[i]) <= R && detail::in_truncation(x, spec);
                x[i] -= s;
                if (!inside) { bd = true; break; }
            }
        }
        gb.set_boundary(vid[bi], bd);
        // edges in +e_i direction
        for (int i = 0; i < d; ++i) {
            if (x[i] + 1 > R) continue;
            x[i] += 1;
            bool inside = detail::in_truncation(x, spec);
            long long bj = 0;
            if (inside)
                for (int k = 0; k < d; ++k) bj = bj * side + (x[k] + R);
            x[i] -= 1;
            if (inside && vid[bj] >= 0) gb.add_edge(vid[bi], vid[bj], 1.0);
        }
    }
    return gb.finalize();
}

/// Ball of combinatorial radius `radius` in the tree of constant vertex
/// degree `degree`: the root has `degree` children, every other internal
/// vertex has degree-1 children.  Vertices at distance `radius` are the
/// boundary layer.  Coordinate label = distance to the root.  Indexing is
/// breadth-first.
inline WeightedGraph build_regular_tree(const TreeSpec& spec) {
    spec.validate();
    const int d = spec.degree, R = spec.radius;
    // sphere sizes: 1, d, d(d-1), d(d-1)^2, ...
    std::vector<Index> sphere(R + 1);
    sphere[0] = 1;
    Index total = 1;
    for (int k = 1; k <= R; ++k) {
        sphere[k] = (k == 1) ? d : sphere[k - 1] * (d - 1);
        total += sphere[k];
        if (total > kMaxModelVertices) throw std::invalid_argument("tree ball exceeds the vertex budget");
    }
    GraphBuilder gb(total, 1);
    Index level_start = 0, next = 1;
    std::int32_t lvl[1] = {0};
    gb.set_coords(0, lvl);
    for (int k = 0; k < R; ++k) {
        Index level_end = level_start + sphere[k];
        int children = (k == 0) ? d : d - 1;
        for (Index p = level_start; p < level_end; ++p) {
            for (int c = 0; c < children; ++c) {
                Index ch = next++;
                lvl[0] = k + 1;
                gb.set_coords(ch, lvl);
                gb.add_edge(p, ch, 1.0);
            }
        }
        level_start = level_end;
    }
    for (Index v = level_start; v < total; ++v) gb.set_boundary(v, true);
    return gb.finalize();
}

// ---------------------------------------------------------------------------
// Symmetry-reduced models.
//
// Functions of interest rooted at the origin (Green functions, criticality
// probes) are invariant under the symmetries that fix the root:
// coordinate permutations and sign flips on Z^d boxes, and arbitrary branch
// permutations on trees.  The orbit quotient is again a weighted graph
// (measure = orbit size, edge weight = total edge count between orbits),
// and the Dirichlet problems rooted at the origin coincide exactly with
// their full-graph counterparts.  This turns radius-R tree balls into
// R+1-vertex paths and shrinks Z^d boxes by a factor ~ 2^d d!.
// ---------------------------------------------------------------------------

/// Weighted path equivalent to the d-regular tree ball of the given radius
/// for radially symmetric data rooted at the root: vertex k carries the
/// sphere size as measure, and b(k,k+1) equals the number of tree edges
/// between spheres k and k+1.
inline WeightedGraph build_tree_radial(const TreeSpec& spec) {
    spec.validate();
    const int d = spec.degree, R = spec.radius;
    GraphBuilder gb(R + 1, 1);
    double sk = 1.0;
    for (int k = 0; k <= R; ++k) {
        std::int32_t lvl[1] = {k};
        gb.set_coords(k, lvl);
        gb.set_measure(k, sk);
        double snext = (k == 0) ? double(d) : sk * (d - 1);
        if (k < R) gb.add_edge(k, k + 1, snext);
        sk = snext;
    }
    gb.set_boundary(R, true);
    return gb.finalize();
}

namespace detail {

/// Canonical orbit representative under coordinate permutations and sign
/// flips: absolute values sorted in decreasing order.
inline void canonical_rep(std::span<int> x) {
    for (int& c : x) c = std::abs(c);
    std::sort(x.begin(), x.end(), std::greater<int>());
}

inline std::uint64_t pack_coords(std::span<const int> x) {
    std::uint64_t key = 0;
    for (int c : x) key = key * 4096u + static_cast<std::uint64_t>(c + 2048);
    return key;
}

inline double orbit_size(std::span<const int> rep, int d) {
    // multiplicity of value classes (including zero) for permutations,
    // one sign per nonzero entry
    double perms = 1.0;
    for (int k = 2; k <= d; ++k) perms *= k;
    int i = 0;
    int nonzero = 0;
    while (i < d) {
        int j = i;
        while (j < d && rep[j] == rep[i]) ++j;
        double fact = 1.0;
        for (int k = 2; k <= j - i; ++k) fact *= k;
        perms /= fact;
        if (rep[i] != 0) nonzero += j - i;
        i = j;
    }
    return perms * std::pow(2.0, nonzero);
}

}  // namespace detail

/// Orbit quotient of the L-infinity box of Z^d under the symmetries fixing
/// the origin.  Exact for origin-rooted Dirichlet problems; see above.
inline WeightedGraph build_lattice_quotient(const LatticeSpec& spec) {
    spec.validate();
    if (spec.norm != TruncationNorm::LInf)
        throw std::invalid_argument("quotient model is implemented for the box truncation only");
    const int d = spec.d, R = spec.radius;
    if (R > 2000) throw std::invalid_argument("quotient radius exceeds the coordinate packing range");

    // enumerate representatives x1 >= x2 >= ... >= xd >= 0, x1 <= R
    std::vector<std::vector<int>> reps;
    std::unordered_map<std::uint64_t, Index> id;
    std::vector<int> x(d, 0);
    std::function<void(int, int)> rec = [&](int pos, int hi) {
        if (pos == d) {
            reps.push_back(x);
            id.emplace(detail::pack_coords(x), static_cast<Index>(reps.size()) - 1);
            return;
        }
        for (int v = hi; v >= 0; --v) { x[pos] = v; rec(pos + 1, v); }
    };
    rec(0, R);

    const Index n = static_cast<Index>(reps.size());
    GraphBuilder gb(n, d);
    std::vector<std::int32_t> cc(d);
    std::vector<int> y(d);
    for (Index v = 0; v < n; ++v) {
        const auto& rep = reps[v];
        for (int i = 0; i < d; ++i) cc[i] = rep[i];
        gb.set_coords(v, cc);
        gb.set_boundary(v, rep[0] == R);
        const double osize = detail::orbit_size(std::span<const int>(rep.data(), d), d);
        gb.set_measure(v, osize);
        // moves from the representative; count multiplicities into each
        // neighboring orbit, then emit b = |orbit| * multiplicity once per
        // unordered pair (from the lexicographically smaller side).
        std::unordered_map<std::uint64_t, int> mult;
        for (int i = 0; i < d; ++i) {
            for (int s : {-1, +1}) {
                y.assign(rep.begin(), rep.end());
                y[i] += s;
                if (std::abs(y[i]) > R) continue;  // leaves the box
                detail::canonical_rep(std::span<int>(y.data(), d));
                ++mult[detail::pack_coords(std::span<const int>(y.data(), d))];
            }
        }
        for (auto& [key, k] : mult) {
            Index u = id.at(key);
            if (u == v) continue;  // moves within the same orbit do not contribute to Delta
            if (u > v) gb.add_edge(v, u, osize * k);
            // the u < v case is added from u's side; totals agree by edge counting
        }
    }
    return gb.finalize();
}

// ---------------------------------------------------------------------------
// Coordinate lookup and TSV serialization
// ---------------------------------------------------------------------------

/// Hash index from coordinate labels to vertex ids (labels must be unique,
/// as they are for lattice models).
class CoordIndex {
public:
    explicit CoordIndex(const WeightedGraph& g) : d_(g.coord_dim()) {
        map_.reserve(static_cast<std::size_t>(g.vertex_count()));
        std::vector<int> tmp(d_);
        for (Index v = 0; v < g.vertex_count(); ++v) {
            auto c = g.coords(v);
            for (int i = 0; i < d_; ++i) tmp[i] = c[i];
            map_.emplace(detail::pack_coords(std::span<const int>(tmp.data(), d_)), v);
        }
    }
    std::optional<Index> find(std::span<const int> coords) const {
        auto it = map_.find(detail::pack_coords(coords));
        if (it == map_.end()) return std::nullopt;
        return it->second;
    }

private:
    int d_;
    std::unordered_map<std::uint64_t, Index> map_;
};

struct LoadedGraph {
    WeightedGraph graph;
    Potential potential;
};

namespace detail {

inline std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (true) {
        std::size_t tab = line.find('\t', pos);
        if (tab == std::string::npos) { out.push_back(line.substr(pos)); break; }
        out.push_back(line.substr(pos, tab - pos));
        pos = tab + 1;
    }
    return out;
}

inline double parse_double(const std::string& s, const std::string& file, long lineno) {
    try {
        std::size_t used = 0;
        double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error(file + ":" + std::to_string(lineno) + ": cannot parse number '" + s + "'");
    }
}

inline long long parse_int(const std::string& s, const std::string& file, long lineno) {
    long long v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
        throw std::runtime_error(file + ":" + std::to_string(lineno) + ": cannot parse integer '" + s + "'");
    return v;
}

}  // namespace detail

/// Reads the TSV pair (edge file: `x<TAB>y<TAB>weight`; vertex file:
/// `x<TAB>m<TAB>V<TAB>is_boundary`) and validates all graph invariants.
/// Duplicate unordered pairs are rejected at the second record.
inline LoadedGraph load_graph(const std::string& edge_path, const std::string& vertex_path) {
    std::ifstream vf(vertex_path);
    if (!vf) throw std::runtime_error("cannot open vertex file " + vertex_path);
    std::vector<double> m, V;
    std::vector<std::uint8_t> bd;
    std::string line;
    long lineno = 0;
    while (std::getline(vf, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        auto f = detail::split_tabs(line);
        if (f.size() != 4)
            throw std::runtime_error(vertex_path + ":" + std::to_string(lineno) + ": expected 4 tab-separated fields");
        long long idx = detail::parse_int(f[0], vertex_path, lineno);
        if (idx != static_cast<long long>(m.size()))
            throw std::runtime_error(vertex_path + ":" + std::to_string(lineno) +
                                     ": vertex indices must be consecutive from 0 (got " + f[0] + ")");
        double mm = detail::parse_double(f[1], vertex_path, lineno);
        if (!(mm > 0.0))
            throw std::runtime_error(vertex_path + ":" + std::to_string(lineno) + ": vertex " + f[0] +
                                     " has nonpositive measure");
        m.push_back(mm);
        V.push_back(detail::parse_double(f[2], vertex_path, lineno));
        long long b = detail::parse_int(f[3], vertex_path, lineno);
        if (b != 0 && b != 1)
            throw std::runtime_error(vertex_path + ":" + std::to_string(lineno) + ": is_boundary must be 0 or 1");
        bd.push_back(static_cast<std::uint8_t>(b));
    }
    if (m.empty()) throw std::runtime_error(vertex_path + ": no vertices");

    GraphBuilder gb(static_cast<Index>(m.size()), 0);
    for (std::size_t i = 0; i < m.size(); ++i) {
        gb.set_measure(static_cast<Index>(i), m[i]);
        gb.set_boundary(static_cast<Index>(i), bd[i] != 0);
    }

    std::ifstream ef(edge_path);
    if (!ef) throw std::runtime_error("cannot open edge file " + edge_path);
    std::unordered_map<std::uint64_t, long> seen;
    lineno = 0;
    while (std::getline(ef, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        auto f = detail::split_tabs(line);
        if (f.size() != 3)
            throw std::runtime_error(edge_path + ":" + std::to_string(lineno) + ": expected 3 tab-separated fields");
        long long x = detail::parse_int(f[0], edge_path, lineno);
        long long y = detail::parse_int(f[1], edge_path, lineno);
        double w = detail::parse_double(f[2], edge_path, lineno);
        if (x < 0 || y < 0 || x >= static_cast<long long>(m.size()) || y >= static_cast<long long>(m.size()))
            throw std::runtime_error(edge_path + ":" + std::to_string(lineno) + ": vertex index out of range");
        if (x == y)
            throw std::runtime_error(edge_path + ":" + std::to_string(lineno) + ": self-loop not allowed");
        if (!(w > 0.0))
            throw std::runtime_error(edge_path + ":" + std::to_string(lineno) + ": edge weight must be positive");
        std::uint64_t key = (static_cast<std::uint64_t>(std::min(x, y)) << 32) | static_cast<std::uint64_t>(std::max(x, y));
        auto [it, inserted] = seen.emplace(key, lineno);
        if (!inserted)
            throw std::runtime_error(edge_path + ":" + std::to_string(lineno) + ": duplicate pair {" + f[0] + "," +
                                     f[1] + "} (first at line " + std::to_string(it->second) + ")");
        gb.add_edge(x, y, w);
    }
    LoadedGraph out{gb.finalize(), std::move(V)};
    return out;
}

/// Writes the TSV pair read back by load_graph.  Deterministic: canonical
/// x < y edge order, 17 significant digits.
inline void save_graph(const WeightedGraph& g, const Potential& V, const std::string& edge_path,
                       const std::string& vertex_path) {
    require_same_size(g, V, "save_graph potential");
    std::ofstream ef(edge_path);
    if (!ef) throw std::runtime_error("cannot open edge file for writing: " + edge_path);
    char buf[64];
    g.for_each_edge([&](Index x, Index y, double w) {
        std::snprintf(buf, sizeof buf, "%.17g", w);
        ef << x << '\t' << y << '\t' << buf << '\n';
    });
    std::ofstream vf(vertex_path);
    if (!vf) throw std::runtime_error("cannot open vertex file for writing: " + vertex_path);
    for (Index x = 0; x < g.vertex_count(); ++x) {
        std::snprintf(buf, sizeof buf, "%.17g", g.measure(x));
        vf << x << '\t' << buf;
        std::snprintf(buf, sizeof buf, "%.17g", V[x]);
        vf << '\t' << buf << '\t' << (g.is_boundary(x) ? 1 : 0) << '\n';
    }
}

}  // namespace gcrit
