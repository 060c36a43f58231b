#pragma once

// Discretely harmonic extension of boundary data and the diagnostics built
// on it: interior/boundary energy split and sup-norm decay away from the
// boundary.

#include "errors.hpp"
#include "lattice.hpp"
#include "operator.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace snowlab {

/// Values on the boundary vertices, in the order of Mesh::boundary_vertices().
struct BoundaryData {
    int level = 0;
    Eigen::VectorXd values;
};

inline void check_boundary_data(const Mesh& mesh, const BoundaryData& f) {
    if (f.level != mesh.level()) throw ArgumentError("boundary data level does not match mesh level");
    check_dimension(static_cast<Eigen::Index>(mesh.boundary_vertices().size()), f.values.size(), "boundary data");
}

/// +1, -1, +1, ... along the boundary cycle.
inline BoundaryData alternating_boundary_data(const Mesh& mesh) {
    const auto& bnd = mesh.boundary_vertices();
    std::vector<Eigen::Index> slot(mesh.num_vertices(), -1);
    for (std::size_t i = 0; i < bnd.size(); ++i) slot[bnd[i]] = static_cast<Eigen::Index>(i);
    BoundaryData f{mesh.level(), Eigen::VectorXd::Zero(static_cast<Eigen::Index>(bnd.size()))};
    const auto cycle = boundary_cycle(mesh);
    for (std::size_t k = 0; k < cycle.size(); ++k) f.values[slot[cycle[k]]] = k % 2 == 0 ? 1.0 : -1.0;
    return f;
}

/// Boundary data sampled from a function of the Cartesian position.
inline BoundaryData sample_boundary_data(const Mesh& mesh, const PlaneFunction& g) {
    const auto& bnd = mesh.boundary_vertices();
    BoundaryData f{mesh.level(), Eigen::VectorXd(static_cast<Eigen::Index>(bnd.size()))};
    for (std::size_t i = 0; i < bnd.size(); ++i) {
        const auto p = cartesian(mesh, bnd[i]);
        f.values[static_cast<Eigen::Index>(i)] = g(p.x, p.y);
    }
    return f;
}

/// Solves S_II u_I = -S_IB f once per mesh; the factorization is reused for
/// every extension and is safe to share read-only.
class HarmonicExtender {
public:
    explicit HarmonicExtender(const Mesh& mesh, double c0 = 1.0) : mesh_(&mesh), c0_(c0) {
        const auto full = assemble(mesh, OperatorKind::full, c0);
        const auto& interior = mesh.interior_vertices();
        const auto& boundary = mesh.boundary_vertices();
        std::vector<Eigen::Index> slot(mesh.num_vertices(), -1);
        std::vector<bool> is_b(mesh.num_vertices(), false);
        for (std::size_t i = 0; i < interior.size(); ++i) slot[interior[i]] = static_cast<Eigen::Index>(i);
        for (std::size_t i = 0; i < boundary.size(); ++i) {
            slot[boundary[i]] = static_cast<Eigen::Index>(i);
            is_b[boundary[i]] = true;
        }
        std::vector<Eigen::Triplet<double>> ii, ib;
        for (Eigen::Index col = 0; col < full.stiffness.outerSize(); ++col) {
            for (SparseMatrix::InnerIterator it(full.stiffness, col); it; ++it) {
                const auto r = static_cast<std::size_t>(it.row());
                const auto c = static_cast<std::size_t>(col);
                if (is_b[r]) continue;
                (is_b[c] ? ib : ii).emplace_back(slot[r], slot[c], it.value());
            }
        }
        const auto ni = static_cast<Eigen::Index>(interior.size());
        interior_block_.resize(ni, ni);
        interior_block_.setFromTriplets(ii.begin(), ii.end());
        coupling_.resize(ni, static_cast<Eigen::Index>(boundary.size()));
        coupling_.setFromTriplets(ib.begin(), ib.end());
        if (ni > 0) {
            solver_.compute(interior_block_);
            if (solver_.info() != Eigen::Success) throw NumericalError("interior stiffness block is singular");
        }
    }

    /// u = f on the boundary and (Lu)(p) = 0 at every interior vertex p.
    Eigen::VectorXd extend(const BoundaryData& f) const {
        check_boundary_data(*mesh_, f);
        Eigen::VectorXd u(static_cast<Eigen::Index>(mesh_->num_vertices()));
        const auto& boundary = mesh_->boundary_vertices();
        for (std::size_t i = 0; i < boundary.size(); ++i) {
            u[static_cast<Eigen::Index>(boundary[i])] = f.values[static_cast<Eigen::Index>(i)];
        }
        const auto& interior = mesh_->interior_vertices();
        if (interior.empty()) return u;
        const Eigen::VectorXd rhs = -(coupling_ * f.values);
        const Eigen::VectorXd ui = solver_.solve(rhs);
        if (solver_.info() != Eigen::Success) throw NumericalError("harmonic extension solve failed");
        for (std::size_t i = 0; i < interior.size(); ++i) {
            u[static_cast<Eigen::Index>(interior[i])] = ui[static_cast<Eigen::Index>(i)];
        }
        return u;
    }

    const Mesh& mesh() const noexcept { return *mesh_; }
    double c0() const noexcept { return c0_; }

private:
    const Mesh* mesh_;
    double c0_;
    SparseMatrix interior_block_;
    SparseMatrix coupling_;
    Eigen::SimplicialLDLT<SparseMatrix> solver_;
};

inline Eigen::VectorXd harmonic_extend(const Mesh& mesh, const BoundaryData& f, double c0 = 1.0) {
    return HarmonicExtender(mesh, c0).extend(f);
}

/// Interior-edge and (c0 * 4^n weighted) boundary-edge parts of E_n(u).
inline EnergySplit energy_split(const Mesh& mesh, const Eigen::VectorXd& u, double c0 = 1.0) {
    return detail::edge_energies(mesh, u, c0);
}

struct DecayShell {
    std::size_t distance = 0;  // hop distance to the nearest boundary vertex
    double sup = 0.0;          // max |u| over interior vertices at that distance
    std::size_t count = 0;
};

/// sup |u| on each shell of interior vertices at hop distance d >= 1 from the boundary.
inline std::vector<DecayShell> decay_profile(const Mesh& mesh, const Eigen::VectorXd& u) {
    check_dimension(static_cast<Eigen::Index>(mesh.num_vertices()), u.size(), "decay_profile");
    const auto dist = boundary_distances(mesh);
    std::vector<DecayShell> shells;
    for (auto v : mesh.interior_vertices()) {
        const auto d = dist[v];
        if (d == std::numeric_limits<std::size_t>::max()) continue;
        if (shells.size() < d) {
            const auto old = shells.size();
            shells.resize(d);
            for (std::size_t i = old; i < d; ++i) shells[i].distance = i + 1;
        }
        auto& s = shells[d - 1];
        s.sup = std::max(s.sup, std::abs(u[static_cast<Eigen::Index>(v)]));
        ++s.count;
    }
    return shells;
}

}  // namespace snowlab
