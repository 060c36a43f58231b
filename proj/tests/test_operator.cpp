#include <snowlab/operator.hpp>

#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <vector>

using namespace snowlab;

namespace {

Eigen::VectorXd random_vector(Eigen::Index n, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Eigen::VectorXd v(n);
    for (auto& x : v) x = g(rng);
    return v;
}

std::size_t first_interior(const Mesh& mesh) { return mesh.interior_vertices().front(); }

// Piecewise-linear FEM energy of the nodal interpolant, from per-triangle
// gradients in Cartesian coordinates.
double fem_energy(const Mesh& mesh, const Eigen::VectorXd& u) {
    double total = 0.0;
    for (const auto& t : mesh.triangles()) {
        const auto p0 = cartesian(mesh, t[0]);
        const auto p1 = cartesian(mesh, t[1]);
        const auto p2 = cartesian(mesh, t[2]);
        Eigen::Matrix2d jac;
        jac << p1.x - p0.x, p2.x - p0.x, p1.y - p0.y, p2.y - p0.y;
        const Eigen::Vector2d du(u[static_cast<Eigen::Index>(t[1])] - u[static_cast<Eigen::Index>(t[0])],
                                 u[static_cast<Eigen::Index>(t[2])] - u[static_cast<Eigen::Index>(t[0])]);
        const Eigen::Vector2d grad = jac.transpose().inverse() * du;
        total += grad.squaredNorm() * std::abs(jac.determinant()) / 2.0;
    }
    return total;
}

double bump(double x, double y) {
    const double r = std::hypot(x - 0.5, y - std::sqrt(3.0) / 6.0);
    return std::max(0.0, 0.2 - r);
}

Eigen::MatrixXd dense(const SparseMatrix& a) { return Eigen::MatrixXd(a); }

}  // namespace

TEST(Conductance, PaperExamples) {
    const auto mesh = build_mesh(4);
    const auto& e = mesh.edges();
    const auto interior_edge = std::find_if(e.begin(), e.end(), [](const Edge& x) { return x.kind == EdgeKind::interior; });
    const auto boundary_edge = std::find_if(e.begin(), e.end(), [](const Edge& x) { return x.kind == EdgeKind::boundary; });
    EXPECT_EQ(conductance(mesh, interior_edge->u, interior_edge->v), 1.0);
    EXPECT_EQ(conductance(mesh, boundary_edge->u, boundary_edge->v), 256.0);
    EXPECT_EQ(conductance(mesh, boundary_edge->v, boundary_edge->u), 256.0);
    EXPECT_EQ(conductance(mesh, boundary_edge->u, boundary_edge->v, 0.5), 128.0);

    const auto v = first_interior(mesh);
    const auto nb = neighbors(mesh, v);
    std::size_t far = 0;
    while (far == v || std::find(nb.begin(), nb.end(), far) != nb.end()) ++far;
    EXPECT_EQ(conductance(mesh, v, far), 0.0);
}

TEST(Conductance, Errors) {
    const auto mesh = build_mesh(1);
    EXPECT_THROW(conductance(mesh, 0, mesh.num_vertices()), ArgumentError);
    EXPECT_THROW(conductance(mesh, 0, 1, 0.0), ArgumentError);
    EXPECT_THROW(conductance(mesh, 0, 1, -1.0), ArgumentError);
}

TEST(Measure, PaperExamples) {
    const auto m1 = build_mesh(1);
    ASSERT_EQ(m1.interior_vertices().size(), 1u);
    EXPECT_EQ(measure(m1, m1.interior_vertices()[0]), 1.0 / 9.0);
    const auto center = m1.find({1, 1});
    ASSERT_TRUE(center);
    EXPECT_EQ(*center, m1.interior_vertices()[0]);

    const auto m4 = build_mesh(4);
    EXPECT_EQ(measure(m4, m4.boundary_vertices()[0]), 1.0 / 256.0);
    EXPECT_EQ(inverse_measure(m4, first_interior(m4)), 6561.0);
    EXPECT_THROW(measure(m4, m4.num_vertices()), ArgumentError);
}

TEST(Assemble, DimensionsAtLevelFour) {
    const auto mesh = build_mesh(4);
    EXPECT_EQ(assemble(mesh, OperatorKind::full).dimension(), 5557);
    EXPECT_EQ(assemble(mesh, OperatorKind::dirichlet).dimension(), 4789);
    EXPECT_EQ(assemble(mesh, OperatorKind::boundary).dimension(), 768);
}

TEST(Assemble, InteriorRowAbsoluteSum) {
    const auto mesh = build_mesh(4);
    const auto op = assemble(mesh, OperatorKind::full);
    const auto v = static_cast<Eigen::Index>(first_interior(mesh));
    double s = 0.0;
    for (SparseMatrix::InnerIterator it(op.stiffness, v); it; ++it) s += std::abs(it.value());
    EXPECT_EQ(op.inv_mass[v] * s, 157464.0);
}

TEST(Assemble, StructuralInvariants) {
    for (int n = 0; n <= 3; ++n) {
        const auto mesh = build_mesh(n);
        for (auto kind : {OperatorKind::full, OperatorKind::dirichlet, OperatorKind::boundary}) {
            if (n == 0 && kind == OperatorKind::dirichlet) continue;
            const auto op = assemble(mesh, kind);
            const Eigen::MatrixXd s = dense(op.stiffness);
            EXPECT_EQ((s - s.transpose()).cwiseAbs().maxCoeff(), 0.0);
            for (Eigen::Index i = 0; i < s.rows(); ++i) {
                for (Eigen::Index j = 0; j < s.cols(); ++j) {
                    if (i != j) EXPECT_LE(s(i, j), 0.0);
                }
            }
            if (kind != OperatorKind::dirichlet) {
                EXPECT_LT(s.rowwise().sum().cwiseAbs().maxCoeff(), 1e-9) << "n=" << n << " " << to_string(kind);
            }
            for (Eigen::Index r = 0; r < op.dimension(); ++r) {
                const auto v = op.vertex_map[static_cast<std::size_t>(r)];
                const double expect = mesh.is_boundary(v) ? std::pow(4.0, -n) : std::pow(9.0, -n);
                EXPECT_NEAR(op.mass[r], expect, expect * 1e-15);
                EXPECT_EQ(op.inv_mass[r], static_cast<double>(pow_int(mesh.is_boundary(v) ? 4 : 9, n)));
            }
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
            const auto& ev = es.eigenvalues();
            const double scale = ev.cwiseAbs().maxCoeff();
            EXPECT_GT(ev.minCoeff(), -1e-12 * scale);
            const auto near_zero = (ev.array().abs() < 1e-10 * scale).count();
            if (kind == OperatorKind::dirichlet) {
                EXPECT_EQ(near_zero, 0);
            } else {
                EXPECT_EQ(near_zero, 1) << "connected graph has a one-dimensional kernel";
            }
        }
    }
}

TEST(Assemble, DirichletIsDeletedFull) {
    for (int n = 1; n <= 3; ++n) {
        const auto mesh = build_mesh(n);
        const auto full = assemble(mesh, OperatorKind::full);
        const auto dir = assemble(mesh, OperatorKind::dirichlet);
        ASSERT_EQ(dir.vertex_map, mesh.interior_vertices());
        const Eigen::MatrixXd f = dense(full.stiffness);
        const Eigen::MatrixXd d = dense(dir.stiffness);
        for (Eigen::Index i = 0; i < d.rows(); ++i) {
            const auto vi = static_cast<Eigen::Index>(dir.vertex_map[static_cast<std::size_t>(i)]);
            EXPECT_EQ(dir.mass[i], full.mass[vi]);
            for (Eigen::Index j = 0; j < d.cols(); ++j) {
                const auto vj = static_cast<Eigen::Index>(dir.vertex_map[static_cast<std::size_t>(j)]);
                EXPECT_EQ(d(i, j), f(vi, vj));
            }
        }
    }
}

TEST(Assemble, BoundaryKindUsesBoundaryEdgesOnly) {
    const auto mesh = build_mesh(2);
    const auto op = assemble(mesh, OperatorKind::boundary, 2.0);
    ASSERT_EQ(op.vertex_map, mesh.boundary_vertices());
    const Eigen::MatrixXd s = dense(op.stiffness);
    for (Eigen::Index i = 0; i < s.rows(); ++i) {
        EXPECT_EQ(s(i, i), 2.0 * 2.0 * 2.0 * 16.0) << "each boundary vertex has two boundary edges";
    }
}

TEST(Assemble, RejectsBadCoupling) {
    const auto mesh = build_mesh(1);
    EXPECT_THROW(assemble(mesh, OperatorKind::full, 0.0), ArgumentError);
    EXPECT_THROW(assemble(mesh, OperatorKind::full, -3.0), ArgumentError);
    EXPECT_THROW(assemble(mesh, OperatorKind::full, std::nan("")), ArgumentError);
}

TEST(Apply, Examples) {
    const auto mesh = build_mesh(1);
    const auto op = assemble(mesh, OperatorKind::full);
    EXPECT_LT(apply(op, Eigen::VectorXd::Constant(op.dimension(), 3.5)).cwiseAbs().maxCoeff(), 1e-12);

    const auto center = static_cast<Eigen::Index>(mesh.interior_vertices()[0]);
    Eigen::VectorXd e = Eigen::VectorXd::Zero(op.dimension());
    e[center] = 1.0;
    EXPECT_EQ(apply(op, e)[center], 108.0);

    EXPECT_THROW(apply(op, Eigen::VectorXd::Zero(op.dimension() + 1)), ArgumentError);
}

TEST(Apply, MatchesPointwiseFormula) {
    std::mt19937_64 rng(7);
    const auto mesh = build_mesh(2);
    const auto op = assemble(mesh, OperatorKind::full, 1.5);
    const auto u = random_vector(op.dimension(), rng);
    const auto lu = apply(op, u);
    for (std::size_t p = 0; p < mesh.num_vertices(); ++p) {
        double s = 0.0;
        for (auto q : neighbors(mesh, p)) {
            s += conductance(mesh, p, q, 1.5) * (u[static_cast<Eigen::Index>(p)] - u[static_cast<Eigen::Index>(q)]);
        }
        const double expect = 2.0 / measure(mesh, p) * s;
        EXPECT_NEAR(lu[static_cast<Eigen::Index>(p)], expect, 1e-9 * std::max(1.0, std::abs(expect)));
    }
}

TEST(Energy, QuadraticFormIdentity) {
    std::mt19937_64 rng(42);
    for (int n = 0; n <= 3; ++n) {
        const auto mesh = build_mesh(n);
        const auto op = assemble(mesh, OperatorKind::full);
        for (int trial = 0; trial < 100; ++trial) {
            const auto u = random_vector(op.dimension(), rng);
            const double lhs = inner_m(op, apply(op, u), u);
            const double rhs = 2.0 * energy(mesh, u);
            EXPECT_NEAR(lhs, rhs, 1e-12 * std::abs(rhs));
            EXPECT_GE(lhs, 0.0);
        }
    }
}

TEST(Energy, Examples) {
    const auto m0 = build_mesh(0);
    EXPECT_EQ(energy(m0, Eigen::Vector3d(1, 0, 0)), 2.0);
    EXPECT_EQ(energy(m0, Eigen::Vector3d(1, 0, 0), 3.0), 6.0);
    EXPECT_EQ(energy(m0, Eigen::Vector3d::Constant(2.0)), 0.0);
    EXPECT_THROW(energy(m0, Eigen::Vector2d(1, 0)), ArgumentError);
}

TEST(Energy, BoundaryPartIsBoundaryGraphEnergy) {
    std::mt19937_64 rng(3);
    const auto mesh = build_mesh(3);
    const auto bop = assemble(mesh, OperatorKind::boundary);
    for (int trial = 0; trial < 10; ++trial) {
        const auto u = random_vector(static_cast<Eigen::Index>(mesh.num_vertices()), rng);
        Eigen::VectorXd ub(bop.dimension());
        for (Eigen::Index r = 0; r < ub.size(); ++r) ub[r] = u[static_cast<Eigen::Index>(bop.vertex_map[static_cast<std::size_t>(r)])];
        const double eb = detail::edge_energies(mesh, u, 1.0).boundary;
        EXPECT_NEAR(eb, 0.5 * inner_m(bop, apply(bop, ub), ub), 1e-12 * eb);
    }
}

TEST(EnergySequence, ConstantGivesZeros) {
    for (double e : energy_sequence([](double, double) { return 1.0; }, 4)) EXPECT_EQ(e, 0.0);
}

TEST(EnergySequence, LinearInteriorPartConverges) {
    const auto seq = energy_sequence([](double x, double) { return x; }, 5, 1.0, EnergyPart::interior);
    ASSERT_EQ(seq.size(), 6u);
    for (std::size_t n = 2; n + 1 < seq.size(); ++n) {
        EXPECT_LT(std::abs(seq[n + 1] - seq[n]), std::abs(seq[n] - seq[n - 1]));
    }
    // sqrt(3) times the snowflake area 2 sqrt(3)/5
    EXPECT_NEAR(seq.back(), 1.2, 0.05);
}

TEST(EnergySequence, BumpMatchesFemEnergy) {
    const auto seq = energy_sequence(bump, 5);
    for (int n = 0; n <= 5; ++n) {
        const auto mesh = build_mesh(n);
        Eigen::VectorXd u(static_cast<Eigen::Index>(mesh.num_vertices()));
        for (std::size_t v = 0; v < mesh.num_vertices(); ++v) {
            const auto p = cartesian(mesh, v);
            u[static_cast<Eigen::Index>(v)] = bump(p.x, p.y);
        }
        const double oracle = std::sqrt(3.0) * fem_energy(mesh, u);
        EXPECT_NEAR(seq[static_cast<std::size_t>(n)], oracle, 1e-10 * std::max(1.0, oracle)) << "n=" << n;
    }
    // Cone energy: sqrt(3) * pi * 0.2^2
    EXPECT_NEAR(seq[5], std::sqrt(3.0) * M_PI * 0.04, 0.01);
    EXPECT_LT(std::abs(seq[5] - seq[4]), std::abs(seq[4] - seq[3]));
}

TEST(EnergySequence, Guards) {
    EXPECT_THROW(energy_sequence(bump, -1), ArgumentError);
    EXPECT_THROW(energy_sequence(bump, 3, 1.0, EnergyPart::total, 2), ResourceError);
}
