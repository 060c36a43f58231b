#pragma once

// Level-n triangulations of the closed Koch snowflake domain on the
// triangular lattice with spacing 3^{-n}. All vertex arithmetic is exact:
// a vertex is a*e1 + b*e2 with e1 = (1,0), e2 = (1/2, sqrt(3)/2).

#include "errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace snowlab {

/// Default upper bound on the mesh level; the vertex count grows like 9^n.
inline constexpr int kDefaultMaxLevel = 6;

struct LatticePoint {
    std::int64_t a = 0;
    std::int64_t b = 0;

    friend constexpr auto operator<=>(const LatticePoint&, const LatticePoint&) = default;
    friend constexpr LatticePoint operator+(LatticePoint p, LatticePoint q) { return {p.a + q.a, p.b + q.b}; }
    friend constexpr LatticePoint operator-(LatticePoint p, LatticePoint q) { return {p.a - q.a, p.b - q.b}; }
    friend constexpr LatticePoint operator*(std::int64_t s, LatticePoint p) { return {s * p.a, s * p.b}; }
};

/// The six unit offsets of the triangular lattice, counter-clockwise from e1.
inline constexpr std::array<LatticePoint, 6> kLatticeOffsets{{
    {1, 0}, {0, 1}, {-1, 1}, {-1, 0}, {0, -1}, {1, -1},
}};

inline constexpr bool is_unit_offset(LatticePoint d) {
    return std::find(kLatticeOffsets.begin(), kLatticeOffsets.end(), d) != kLatticeOffsets.end();
}

/// Rotation by +60 degrees in lattice coordinates (e1 -> e2, e2 -> e2 - e1).
inline constexpr LatticePoint rotate60(LatticePoint p) { return {-p.b, p.a + p.b}; }
/// Rotation by -60 degrees.
inline constexpr LatticePoint rotate_minus60(LatticePoint p) { return {p.a + p.b, -p.a}; }

/// Sign-preserving cross product (the Cartesian value times 2/sqrt(3)).
inline constexpr std::int64_t lattice_cross(LatticePoint u, LatticePoint v) { return u.a * v.b - u.b * v.a; }

struct LatticePointHash {
    std::size_t operator()(const LatticePoint& p) const noexcept {
        auto h = static_cast<std::uint64_t>(p.a) * 0x9e3779b97f4a7c15ull;
        h ^= static_cast<std::uint64_t>(p.b) + 0x7f4a7c159e3779b9ull + (h << 6) + (h >> 2);
        return static_cast<std::size_t>(h);
    }
};

enum class EdgeKind : std::uint8_t { interior, boundary };

struct Edge {
    std::size_t u = 0;  // u < v
    std::size_t v = 0;
    EdgeKind kind = EdgeKind::interior;
    friend bool operator==(const Edge&, const Edge&) = default;
};

using Triangle = std::array<std::size_t, 3>;

/// Adjacency entry: neighbouring vertex and the index of the connecting edge.
struct Incidence {
    std::size_t vertex;
    std::size_t edge;
};

/// Triangulated snowflake approximation. Immutable once constructed; every
/// derived table (edges, boundary flags, adjacency) is computed from the
/// vertex and triangle lists.
class Mesh {
public:
    Mesh() = default;

    /// Builds the derived tables without validating any invariant, so a
    /// deliberately broken mesh can still be inspected by validate().
    static Mesh from_parts(int level, std::vector<LatticePoint> vertices, std::vector<Triangle> triangles) {
        if (level < 0) throw ArgumentError("mesh level must be nonnegative");
        Mesh mesh;
        mesh.level_ = level;
        mesh.vertices_ = std::move(vertices);
        mesh.triangles_ = std::move(triangles);
        const std::size_t nv = mesh.vertices_.size();

        std::unordered_map<std::uint64_t, std::size_t> edge_count;
        auto key = [nv](std::size_t i, std::size_t j) {
            if (i > j) std::swap(i, j);
            return static_cast<std::uint64_t>(i) * static_cast<std::uint64_t>(nv) + j;
        };
        for (const auto& t : mesh.triangles_) {
            for (std::size_t k = 0; k < 3; ++k) {
                const std::size_t i = t[k];
                const std::size_t j = t[(k + 1) % 3];
                if (i >= nv || j >= nv) throw ArgumentError("triangle references vertex index out of range");
                if (i == j) throw ArgumentError("degenerate triangle with repeated vertex");
                ++edge_count[key(i, j)];
            }
        }
        mesh.edges_.reserve(edge_count.size());
        mesh.edge_triangles_.reserve(edge_count.size());
        std::vector<std::pair<std::uint64_t, std::size_t>> sorted(edge_count.begin(), edge_count.end());
        std::sort(sorted.begin(), sorted.end());
        for (const auto& [k, count] : sorted) {
            const std::size_t u = static_cast<std::size_t>(k / nv);
            const std::size_t v = static_cast<std::size_t>(k % nv);
            mesh.edges_.push_back({u, v, count == 1 ? EdgeKind::boundary : EdgeKind::interior});
            mesh.edge_triangles_.push_back(count);
        }

        mesh.boundary_flags_.assign(nv, false);
        for (const auto& e : mesh.edges_) {
            if (e.kind == EdgeKind::boundary) {
                mesh.boundary_flags_[e.u] = true;
                mesh.boundary_flags_[e.v] = true;
            }
        }
        for (std::size_t i = 0; i < nv; ++i) {
            (mesh.boundary_flags_[i] ? mesh.boundary_ : mesh.interior_).push_back(i);
        }

        // CSR adjacency over mesh edges, neighbours ascending.
        mesh.adjacency_offsets_.assign(nv + 1, 0);
        for (const auto& e : mesh.edges_) {
            ++mesh.adjacency_offsets_[e.u + 1];
            ++mesh.adjacency_offsets_[e.v + 1];
        }
        for (std::size_t i = 0; i < nv; ++i) mesh.adjacency_offsets_[i + 1] += mesh.adjacency_offsets_[i];
        mesh.adjacency_.resize(mesh.adjacency_offsets_.back());
        std::vector<std::size_t> fill(mesh.adjacency_offsets_.begin(), mesh.adjacency_offsets_.end() - 1);
        for (std::size_t ei = 0; ei < mesh.edges_.size(); ++ei) {
            const auto& e = mesh.edges_[ei];
            mesh.adjacency_[fill[e.u]++] = {e.v, ei};
            mesh.adjacency_[fill[e.v]++] = {e.u, ei};
        }
        for (std::size_t i = 0; i < nv; ++i) {
            std::sort(mesh.adjacency_.begin() + static_cast<std::ptrdiff_t>(mesh.adjacency_offsets_[i]),
                      mesh.adjacency_.begin() + static_cast<std::ptrdiff_t>(mesh.adjacency_offsets_[i + 1]),
                      [](const Incidence& x, const Incidence& y) { return x.vertex < y.vertex; });
        }

        mesh.lookup_.reserve(nv);
        for (std::size_t i = 0; i < nv; ++i) mesh.lookup_.try_emplace(mesh.vertices_[i], i);
        return mesh;
    }

    int level() const noexcept { return level_; }
    std::size_t num_vertices() const noexcept { return vertices_.size(); }
    std::size_t num_edges() const noexcept { return edges_.size(); }
    std::size_t num_triangles() const noexcept { return triangles_.size(); }

    const std::vector<LatticePoint>& vertices() const noexcept { return vertices_; }
    const std::vector<Triangle>& triangles() const noexcept { return triangles_; }
    const std::vector<Edge>& edges() const noexcept { return edges_; }
    /// Number of triangles containing each edge (parallel to edges()).
    const std::vector<std::size_t>& edge_triangle_counts() const noexcept { return edge_triangles_; }
    const std::vector<bool>& boundary_flags() const noexcept { return boundary_flags_; }
    /// Boundary vertex indices, ascending. BoundaryData is indexed by position in this list.
    const std::vector<std::size_t>& boundary_vertices() const noexcept { return boundary_; }
    const std::vector<std::size_t>& interior_vertices() const noexcept { return interior_; }

    bool is_boundary(std::size_t v) const {
        check_index(v);
        return boundary_flags_[v];
    }

    /// Mesh-edge incidences of v, sorted by neighbour index.
    std::span<const Incidence> incidences(std::size_t v) const {
        check_index(v);
        return {adjacency_.data() + adjacency_offsets_[v], adjacency_offsets_[v + 1] - adjacency_offsets_[v]};
    }

    std::size_t degree(std::size_t v) const { return incidences(v).size(); }

    std::optional<std::size_t> find(LatticePoint p) const {
        if (auto it = lookup_.find(p); it != lookup_.end()) return it->second;
        return std::nullopt;
    }

    /// Index of the edge joining p and q, if any.
    std::optional<std::size_t> edge_between(std::size_t p, std::size_t q) const {
        check_index(q);
        for (const auto& inc : incidences(p)) {
            if (inc.vertex == q) return inc.edge;
        }
        return std::nullopt;
    }

    void check_index(std::size_t v) const {
        if (v >= vertices_.size()) {
            throw ArgumentError("vertex index " + std::to_string(v) + " out of range for mesh with " +
                                std::to_string(vertices_.size()) + " vertices");
        }
    }

private:
    int level_ = 0;
    std::vector<LatticePoint> vertices_;
    std::vector<Triangle> triangles_;
    std::vector<Edge> edges_;
    std::vector<std::size_t> edge_triangles_;
    std::vector<bool> boundary_flags_;
    std::vector<std::size_t> boundary_;
    std::vector<std::size_t> interior_;
    std::vector<std::size_t> adjacency_offsets_;
    std::vector<Incidence> adjacency_;
    std::unordered_map<LatticePoint, std::size_t, LatticePointHash> lookup_;
};

namespace detail {

using PointTriangle = std::array<LatticePoint, 3>;

struct PointPairHash {
    std::size_t operator()(const std::pair<LatticePoint, LatticePoint>& e) const noexcept {
        LatticePointHash h;
        return h(e.first) * 31u + h(e.second);
    }
};

inline PointTriangle canonical(PointTriangle t) {
    std::sort(t.begin(), t.end());
    return t;
}

// One refinement step: subdivide each triangle into nine and append an
// outward triangle on the middle third of every boundary edge.
inline std::vector<PointTriangle> refine(const std::vector<PointTriangle>& coarse) {
    struct EdgeInfo {
        int count = 0;
        LatticePoint opposite;
    };
    std::unordered_map<std::pair<LatticePoint, LatticePoint>, EdgeInfo, PointPairHash> edges;
    edges.reserve(coarse.size() * 2);
    for (const auto& t : coarse) {
        for (int k = 0; k < 3; ++k) {
            auto p = t[k];
            auto q = t[(k + 1) % 3];
            if (q < p) std::swap(p, q);
            auto& info = edges[{p, q}];
            ++info.count;
            info.opposite = t[(k + 2) % 3];
        }
    }

    std::vector<PointTriangle> fine;
    fine.reserve(coarse.size() * 9 + edges.size());
    for (const auto& t : coarse) {
        const LatticePoint origin = 3 * t[0];
        const LatticePoint u = t[1] - t[0];
        const LatticePoint v = t[2] - t[0];
        auto at = [&](std::int64_t i, std::int64_t j) { return origin + i * u + j * v; };
        for (std::int64_t i = 0; i < 3; ++i) {
            for (std::int64_t j = 0; i + j < 3; ++j) {
                fine.push_back(canonical({at(i, j), at(i + 1, j), at(i, j + 1)}));
                if (i + j < 2) fine.push_back(canonical({at(i + 1, j), at(i, j + 1), at(i + 1, j + 1)}));
            }
        }
    }
    for (const auto& [e, info] : edges) {
        if (info.count != 1) continue;
        const LatticePoint d = e.second - e.first;
        const LatticePoint start = 3 * e.first + d;
        const LatticePoint end = start + d;
        const auto inward = lattice_cross(d, info.opposite - e.first);
        LatticePoint apex = start + rotate60(d);
        if ((lattice_cross(d, rotate60(d)) > 0) == (inward > 0)) apex = start + rotate_minus60(d);
        fine.push_back(canonical({start, end, apex}));
    }
    return fine;
}

}  // namespace detail

/// Builds the level-n snowflake triangulation. Level 0 is the single unit
/// triangle (0,0), (1,0), (0,1); vertices come out lexicographically sorted
/// and triangles as sorted index triples in sorted order.
inline Mesh build_mesh(int level, int max_level = kDefaultMaxLevel) {
    if (level < 0) throw ArgumentError("mesh level must be nonnegative, got " + std::to_string(level));
    if (level > max_level) {
        throw ResourceError("mesh level " + std::to_string(level) + " exceeds guard " + std::to_string(max_level));
    }
    std::vector<detail::PointTriangle> tris{detail::canonical({LatticePoint{0, 0}, {1, 0}, {0, 1}})};
    for (int n = 0; n < level; ++n) tris = detail::refine(tris);

    std::vector<LatticePoint> vertices;
    vertices.reserve(tris.size() * 3);
    for (const auto& t : tris) vertices.insert(vertices.end(), t.begin(), t.end());
    std::sort(vertices.begin(), vertices.end());
    vertices.erase(std::unique(vertices.begin(), vertices.end()), vertices.end());

    auto index_of = [&](LatticePoint p) {
        return static_cast<std::size_t>(std::lower_bound(vertices.begin(), vertices.end(), p) - vertices.begin());
    };
    std::vector<Triangle> triangles;
    triangles.reserve(tris.size());
    for (const auto& t : tris) triangles.push_back({index_of(t[0]), index_of(t[1]), index_of(t[2])});
    std::sort(triangles.begin(), triangles.end());
    return Mesh::from_parts(level, std::move(vertices), std::move(triangles));
}

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

/// Cartesian position of vertex v. The operators never read coordinates;
/// `scale` only rescales plot output (the level-0 side length).
inline Point2 cartesian(const Mesh& mesh, std::size_t v, double scale = 1.0) {
    mesh.check_index(v);
    const auto p = mesh.vertices()[v];
    const double h = scale / std::pow(3.0, mesh.level());
    return {(static_cast<double>(p.a) + 0.5 * static_cast<double>(p.b)) * h,
            static_cast<double>(p.b) * (std::sqrt(3.0) / 2.0) * h};
}

/// Vertices at lattice distance one from v that are present in the mesh, ascending.
inline std::vector<std::size_t> neighbors(const Mesh& mesh, std::size_t v) {
    mesh.check_index(v);
    std::vector<std::size_t> out;
    for (const auto d : kLatticeOffsets) {
        if (auto q = mesh.find(mesh.vertices()[v] + d)) out.push_back(*q);
    }
    std::sort(out.begin(), out.end());
    return out;
}

/// Boundary vertices in cyclic order, starting at the lowest boundary index
/// and running counter-clockwise.
inline std::vector<std::size_t> boundary_cycle(const Mesh& mesh) {
    const auto& bnd = mesh.boundary_vertices();
    if (bnd.empty()) return {};
    auto boundary_nbrs = [&](std::size_t v) {
        std::vector<std::size_t> out;
        for (const auto& inc : mesh.incidences(v)) {
            if (mesh.edges()[inc.edge].kind == EdgeKind::boundary) out.push_back(inc.vertex);
        }
        return out;
    };
    std::vector<std::size_t> cycle{bnd.front()};
    std::vector<bool> seen(mesh.num_vertices(), false);
    seen[bnd.front()] = true;
    std::size_t prev = bnd.front();
    auto first = boundary_nbrs(bnd.front());
    if (first.size() != 2) throw ArgumentError("boundary is not a simple closed curve");
    std::size_t cur = first[0];
    while (cur != bnd.front()) {
        if (seen[cur]) throw ArgumentError("boundary is not a simple closed curve");
        seen[cur] = true;
        cycle.push_back(cur);
        auto nb = boundary_nbrs(cur);
        if (nb.size() != 2) throw ArgumentError("boundary is not a simple closed curve");
        const std::size_t next = nb[0] == prev ? nb[1] : nb[0];
        prev = cur;
        cur = next;
    }
    if (cycle.size() != bnd.size()) throw ArgumentError("boundary has more than one component");

    // Orient counter-clockwise via the exact shoelace sum.
    std::int64_t area2 = 0;
    for (std::size_t i = 0; i < cycle.size(); ++i) {
        area2 += lattice_cross(mesh.vertices()[cycle[i]], mesh.vertices()[cycle[(i + 1) % cycle.size()]]);
    }
    if (area2 < 0) std::reverse(cycle.begin() + 1, cycle.end());
    return cycle;
}

/// Unweighted hop distance from each vertex to the nearest boundary vertex;
/// SIZE_MAX for vertices not connected to the boundary.
inline std::vector<std::size_t> boundary_distances(const Mesh& mesh) {
    constexpr auto unreached = std::numeric_limits<std::size_t>::max();
    std::vector<std::size_t> dist(mesh.num_vertices(), unreached);
    std::deque<std::size_t> queue;
    for (auto b : mesh.boundary_vertices()) {
        dist[b] = 0;
        queue.push_back(b);
    }
    while (!queue.empty()) {
        const auto v = queue.front();
        queue.pop_front();
        for (const auto& inc : mesh.incidences(v)) {
            if (dist[inc.vertex] == unreached) {
                dist[inc.vertex] = dist[v] + 1;
                queue.push_back(inc.vertex);
            }
        }
    }
    return dist;
}

inline std::int64_t pow_int(std::int64_t base, int exp) {
    std::int64_t r = 1;
    for (int i = 0; i < exp; ++i) r *= base;
    return r;
}

struct InvariantCheck {
    std::string name;
    bool passed = true;
    std::vector<std::size_t> counterexamples;  // offending vertex or edge indices, capped
    std::string detail;
};

struct ValidationReport {
    std::vector<InvariantCheck> checks;

    bool ok() const {
        return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
    }
    const InvariantCheck* find(const std::string& name) const {
        for (const auto& c : checks) {
            if (c.name == name) return &c;
        }
        return nullptr;
    }
};

/// Checks every structural invariant of a snowflake mesh and reports each one
/// separately, with up to 16 counterexample indices per failure.
inline ValidationReport validate(const Mesh& mesh) {
    constexpr std::size_t kMaxExamples = 16;
    ValidationReport report;
    auto add = [&](std::string name) -> InvariantCheck& {
        report.checks.push_back({std::move(name), true, {}, {}});
        return report.checks.back();
    };
    auto fail = [&](InvariantCheck& c, std::size_t idx) {
        c.passed = false;
        if (c.counterexamples.size() < kMaxExamples) c.counterexamples.push_back(idx);
    };

    const auto& verts = mesh.vertices();
    const auto nv = verts.size();
    const std::size_t expected_boundary = 3 * static_cast<std::size_t>(pow_int(4, mesh.level()));

    auto& order = add("canonical_order");
    for (std::size_t i = 1; i < nv; ++i) {
        if (!(verts[i - 1] < verts[i]) && !(verts[i - 1] == verts[i])) fail(order, i);
    }

    auto& distinct = add("distinct_vertices");
    {
        std::unordered_map<LatticePoint, std::size_t, LatticePointHash> first;
        for (std::size_t i = 0; i < nv; ++i) {
            if (!first.try_emplace(verts[i], i).second) fail(distinct, i);
        }
    }

    auto& unit = add("unit_edge_length");
    for (std::size_t e = 0; e < mesh.num_edges(); ++e) {
        const auto& ed = mesh.edges()[e];
        if (!is_unit_offset(verts[ed.v] - verts[ed.u])) fail(unit, e);
    }

    auto& shared = add("edge_triangle_count");
    for (std::size_t e = 0; e < mesh.num_edges(); ++e) {
        const auto c = mesh.edge_triangle_counts()[e];
        if (c != 1 && c != 2) fail(shared, e);
    }

    auto& bverts = add("boundary_vertex_count");
    if (mesh.boundary_vertices().size() != expected_boundary) {
        bverts.passed = false;
        bverts.detail = "expected " + std::to_string(expected_boundary) + ", found " +
                        std::to_string(mesh.boundary_vertices().size());
    }

    auto& bedges = add("boundary_edge_count");
    const auto nbe = static_cast<std::size_t>(std::count_if(
        mesh.edges().begin(), mesh.edges().end(), [](const Edge& e) { return e.kind == EdgeKind::boundary; }));
    if (nbe != expected_boundary) {
        bedges.passed = false;
        bedges.detail = "expected " + std::to_string(expected_boundary) + ", found " + std::to_string(nbe);
    }

    auto& degree = add("vertex_degree");
    for (std::size_t v = 0; v < nv; ++v) {
        const auto d = mesh.degree(v);
        const bool good = mesh.boundary_flags()[v] ? (d == 2 || d == 5) : d == 6;
        if (!good) fail(degree, v);
    }

    auto& euler = add("euler_characteristic");
    const auto chi = static_cast<std::int64_t>(nv) - static_cast<std::int64_t>(mesh.num_edges()) +
                     static_cast<std::int64_t>(mesh.num_triangles());
    if (chi != 1) {
        euler.passed = false;
        euler.detail = "V - E + T = " + std::to_string(chi);
    }

    auto& flags = add("boundary_flags");
    {
        std::vector<bool> derived(nv, false);
        for (const auto& e : mesh.edges()) {
            if (e.kind == EdgeKind::boundary) derived[e.u] = derived[e.v] = true;
        }
        for (std::size_t v = 0; v < nv; ++v) {
            if (derived[v] != mesh.boundary_flags()[v]) fail(flags, v);
        }
    }

    auto& lattice = add("lattice_adjacency");
    for (std::size_t v = 0; v < nv; ++v) {
        for (const auto d : kLatticeOffsets) {
            auto q = mesh.find(verts[v] + d);
            if (q && !mesh.edge_between(v, *q)) {
                fail(lattice, v);
                break;
            }
        }
    }
    return report;
}

}  // namespace snowlab
