#pragma once

// Graph energy, vertex measure and the discrete Laplacian L = M^{-1} S on a
// snowflake mesh. S carries the factor 2 of the pointwise formula
//   (Lu)(p) = (2 / m(p)) * sum_q c(p,q) (u(p) - u(q)),
// so S_pq = -2 c(p,q) off the diagonal and S_pp = 2 sum_q c(p,q).

#include "errors.hpp"
#include "lattice.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cmath>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace snowlab {

enum class OperatorKind { full, dirichlet, boundary };

inline std::string to_string(OperatorKind kind) {
    switch (kind) {
        case OperatorKind::full: return "full";
        case OperatorKind::dirichlet: return "dirichlet";
        case OperatorKind::boundary: return "boundary";
    }
    return "unknown";
}

inline OperatorKind parse_operator_kind(std::string_view s) {
    if (s == "full") return OperatorKind::full;
    if (s == "dirichlet") return OperatorKind::dirichlet;
    if (s == "boundary") return OperatorKind::boundary;
    throw ArgumentError("unknown operator kind '" + std::string(s) + "'");
}

using SparseMatrix = Eigen::SparseMatrix<double>;

struct OperatorBundle {
    OperatorKind kind = OperatorKind::full;
    int level = 0;
    double c0 = 1.0;
    SparseMatrix stiffness;                // S, symmetric
    Eigen::VectorXd mass;                  // m(p)
    Eigen::VectorXd inv_mass;              // 1/m(p): exact powers 9^n or 4^n
    std::vector<std::size_t> vertex_map;   // operator row -> mesh vertex

    Eigen::Index dimension() const noexcept { return mass.size(); }
};

inline void check_c0(double c0) {
    if (!(c0 > 0.0) || !std::isfinite(c0)) throw ArgumentError("boundary coupling c0 must be positive and finite");
}

/// Boundary edge conductance c0 * 4^n (exact for c0 = 1 up to n = 26).
inline double boundary_conductance(int level, double c0) {
    return c0 * static_cast<double>(pow_int(4, level));
}

/// c_n(p,q): 1 on interior edges, c0 * 4^n on boundary edges, 0 otherwise.
inline double conductance(const Mesh& mesh, std::size_t p, std::size_t q, double c0 = 1.0) {
    check_c0(c0);
    mesh.check_index(p);
    mesh.check_index(q);
    const auto e = mesh.edge_between(p, q);
    if (!e) return 0.0;
    return mesh.edges()[*e].kind == EdgeKind::boundary ? boundary_conductance(mesh.level(), c0) : 1.0;
}

inline double inverse_measure(const Mesh& mesh, std::size_t p) {
    mesh.check_index(p);
    return static_cast<double>(pow_int(mesh.is_boundary(p) ? 4 : 9, mesh.level()));
}

/// m_n(p): 9^{-n} on interior vertices, 4^{-n} on boundary vertices.
/// Boundary values are exact; interior values are correctly rounded.
inline double measure(const Mesh& mesh, std::size_t p) { return 1.0 / inverse_measure(mesh, p); }

namespace detail {

inline double edge_conductance(const Mesh& mesh, const Edge& e, double c0) {
    return e.kind == EdgeKind::boundary ? boundary_conductance(mesh.level(), c0) : 1.0;
}

inline SparseMatrix restrict_symmetric(const SparseMatrix& full, const std::vector<std::size_t>& keep) {
    std::vector<Eigen::Index> slot(static_cast<std::size_t>(full.rows()), -1);
    for (std::size_t i = 0; i < keep.size(); ++i) slot[keep[i]] = static_cast<Eigen::Index>(i);
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(full.nonZeros()));
    for (Eigen::Index col = 0; col < full.outerSize(); ++col) {
        if (slot[static_cast<std::size_t>(col)] < 0) continue;
        for (SparseMatrix::InnerIterator it(full, col); it; ++it) {
            const auto r = slot[static_cast<std::size_t>(it.row())];
            if (r >= 0) trip.emplace_back(r, slot[static_cast<std::size_t>(col)], it.value());
        }
    }
    const auto n = static_cast<Eigen::Index>(keep.size());
    SparseMatrix out(n, n);
    out.setFromTriplets(trip.begin(), trip.end());
    return out;
}

}  // namespace detail

/// Assembles S and m for the requested operator.
///  - full: all vertices and edges;
///  - dirichlet: full S and m with boundary rows and columns deleted;
///  - boundary: boundary vertices and boundary edges only.
inline OperatorBundle assemble(const Mesh& mesh, OperatorKind kind, double c0 = 1.0) {
    check_c0(c0);
    OperatorBundle op;
    op.kind = kind;
    op.level = mesh.level();
    op.c0 = c0;

    std::vector<std::size_t> keep;
    const bool boundary_only = kind == OperatorKind::boundary;
    switch (kind) {
        case OperatorKind::full:
            keep.resize(mesh.num_vertices());
            for (std::size_t i = 0; i < keep.size(); ++i) keep[i] = i;
            break;
        case OperatorKind::dirichlet: keep = mesh.interior_vertices(); break;
        case OperatorKind::boundary: keep = mesh.boundary_vertices(); break;
    }

    const auto nv = static_cast<Eigen::Index>(mesh.num_vertices());
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(mesh.num_edges() * 4);
    for (const auto& e : mesh.edges()) {
        if (boundary_only && e.kind != EdgeKind::boundary) continue;
        const double w = 2.0 * detail::edge_conductance(mesh, e, c0);
        const auto u = static_cast<Eigen::Index>(e.u);
        const auto v = static_cast<Eigen::Index>(e.v);
        trip.emplace_back(u, v, -w);
        trip.emplace_back(v, u, -w);
        trip.emplace_back(u, u, w);
        trip.emplace_back(v, v, w);
    }
    SparseMatrix full(nv, nv);
    full.setFromTriplets(trip.begin(), trip.end());

    op.stiffness = kind == OperatorKind::full ? std::move(full) : detail::restrict_symmetric(full, keep);
    op.stiffness.makeCompressed();
    op.mass.resize(static_cast<Eigen::Index>(keep.size()));
    op.inv_mass.resize(static_cast<Eigen::Index>(keep.size()));
    for (std::size_t i = 0; i < keep.size(); ++i) {
        op.inv_mass[static_cast<Eigen::Index>(i)] = inverse_measure(mesh, keep[i]);
        op.mass[static_cast<Eigen::Index>(i)] = measure(mesh, keep[i]);
    }
    op.vertex_map = std::move(keep);
    return op;
}

inline void check_dimension(Eigen::Index expected, Eigen::Index got, const char* what) {
    if (expected != got) {
        throw ArgumentError(std::string(what) + ": dimension mismatch (expected " + std::to_string(expected) +
                            ", got " + std::to_string(got) + ")");
    }
}

/// Lu = M^{-1} S u.
inline Eigen::VectorXd apply(const OperatorBundle& op, const Eigen::VectorXd& u) {
    check_dimension(op.dimension(), u.size(), "apply");
    return op.inv_mass.cwiseProduct(op.stiffness * u);
}

/// <u, v>_m = sum_p m(p) u(p) v(p).
inline double inner_m(const OperatorBundle& op, const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
    check_dimension(op.dimension(), u.size(), "inner_m");
    check_dimension(op.dimension(), v.size(), "inner_m");
    return (op.mass.array() * u.array() * v.array()).sum();
}

struct EnergySplit {
    double interior = 0.0;
    double boundary = 0.0;
    double total() const { return interior + boundary; }
};

namespace detail {

inline EnergySplit edge_energies(const Mesh& mesh, const Eigen::VectorXd& u, double c0) {
    check_c0(c0);
    check_dimension(static_cast<Eigen::Index>(mesh.num_vertices()), u.size(), "energy");
    EnergySplit s;
    for (const auto& e : mesh.edges()) {
        const double d = u[static_cast<Eigen::Index>(e.u)] - u[static_cast<Eigen::Index>(e.v)];
        (e.kind == EdgeKind::boundary ? s.boundary : s.interior) += d * d;
    }
    s.boundary *= boundary_conductance(mesh.level(), c0);
    return s;
}

}  // namespace detail

/// E_n(u) = sum over unordered edges {p,q} of c_n(p,q) (u(p) - u(q))^2.
/// With the factor 2 in L this gives <Lu, u>_m = 2 E_n(u).
inline double energy(const Mesh& mesh, const Eigen::VectorXd& u, double c0 = 1.0) {
    return detail::edge_energies(mesh, u, c0).total();
}

enum class EnergyPart { total, interior, boundary };

using PlaneFunction = std::function<double(double, double)>;

/// E_n(f restricted to the level-n vertices) for n = 0..n_max.
inline std::vector<double> energy_sequence(const PlaneFunction& f, int n_max, double c0 = 1.0,
                                           EnergyPart part = EnergyPart::total, int max_level = kDefaultMaxLevel) {
    if (n_max < 0) throw ArgumentError("n_max must be nonnegative");
    std::vector<double> out;
    for (int n = 0; n <= n_max; ++n) {
        const auto mesh = build_mesh(n, max_level);
        Eigen::VectorXd u(static_cast<Eigen::Index>(mesh.num_vertices()));
        for (std::size_t v = 0; v < mesh.num_vertices(); ++v) {
            const auto p = cartesian(mesh, v);
            u[static_cast<Eigen::Index>(v)] = f(p.x, p.y);
        }
        const auto s = detail::edge_energies(mesh, u, c0);
        switch (part) {
            case EnergyPart::total: out.push_back(s.total()); break;
            case EnergyPart::interior: out.push_back(s.interior); break;
            case EnergyPart::boundary: out.push_back(s.boundary); break;
        }
    }
    return out;
}

}  // namespace snowlab
