#include <snowlab/harmonic.hpp>
#include <snowlab/solver.hpp>

#include <gtest/gtest.h>

#include <random>

using namespace snowlab;

namespace {

BoundaryData random_boundary(const Mesh& mesh, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> g(-1.0, 1.0);
    BoundaryData f{mesh.level(), Eigen::VectorXd(static_cast<Eigen::Index>(mesh.boundary_vertices().size()))};
    for (auto& x : f.values) x = g(rng);
    return f;
}

const Mesh& mesh3() {
    static const Mesh m = build_mesh(3);
    return m;
}

}  // namespace

TEST(HarmonicExtend, ConstantData) {
    const auto& mesh = mesh3();
    const BoundaryData f{3, Eigen::VectorXd::Constant(192, 2.5)};
    const auto u = harmonic_extend(mesh, f);
    EXPECT_LT((u.array() - 2.5).abs().maxCoeff(), 1e-12);
}

TEST(HarmonicExtend, LinearFunctionIsReproduced) {
    for (int n = 1; n <= 3; ++n) {
        const auto mesh = build_mesh(n);
        const auto f = sample_boundary_data(mesh, [](double x, double) { return x; });
        const auto u = harmonic_extend(mesh, f);
        for (std::size_t v = 0; v < mesh.num_vertices(); ++v) {
            EXPECT_NEAR(u[static_cast<Eigen::Index>(v)], cartesian(mesh, v).x, 1e-12) << "n=" << n << " v=" << v;
        }
    }
}

TEST(HarmonicExtend, ZeroLaplacianInside) {
    std::mt19937_64 rng(11);
    const auto& mesh = mesh3();
    const auto op = assemble(mesh, OperatorKind::full, 2.0);
    const auto u = HarmonicExtender(mesh, 2.0).extend(random_boundary(mesh, rng));
    const auto lu = apply(op, u);
    for (auto v : mesh.interior_vertices()) EXPECT_LT(std::abs(lu[static_cast<Eigen::Index>(v)]), 1e-8);
    for (std::size_t i = 0; i < mesh.boundary_vertices().size(); ++i) {
        EXPECT_NE(lu[static_cast<Eigen::Index>(mesh.boundary_vertices()[i])], 0.0);
    }
}

TEST(HarmonicExtend, MaximumPrinciple) {
    std::mt19937_64 rng(1);
    const auto& mesh = mesh3();
    const HarmonicExtender ext(mesh);
    for (int trial = 0; trial < 100; ++trial) {
        const auto f = random_boundary(mesh, rng);
        const auto u = ext.extend(f);
        EXPECT_GE(u.minCoeff(), f.values.minCoeff() - 1e-12);
        EXPECT_LE(u.maxCoeff(), f.values.maxCoeff() + 1e-12);
    }
}

TEST(HarmonicExtend, Linearity) {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> coef(-3.0, 3.0);
    const auto& mesh = mesh3();
    const HarmonicExtender ext(mesh);
    for (int trial = 0; trial < 100; ++trial) {
        const auto f = random_boundary(mesh, rng);
        const auto g = random_boundary(mesh, rng);
        const double a = coef(rng), b = coef(rng);
        const BoundaryData h{3, a * f.values + b * g.values};
        const Eigen::VectorXd lhs = ext.extend(h);
        const Eigen::VectorXd rhs = a * ext.extend(f) + b * ext.extend(g);
        EXPECT_LE((lhs - rhs).norm(), 1e-12 * std::max(1.0, rhs.norm()));
    }
}

TEST(HarmonicExtend, EnergyMinimality) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g(0.0, 0.1);
    const auto& mesh = mesh3();
    const HarmonicExtender ext(mesh);
    for (int trial = 0; trial < 100; ++trial) {
        const auto u = ext.extend(random_boundary(mesh, rng));
        const double e0 = energy_split(mesh, u).interior;
        for (int k = 0; k < 100; ++k) {
            Eigen::VectorXd w = u;
            for (auto v : mesh.interior_vertices()) w[static_cast<Eigen::Index>(v)] += g(rng);
            const auto s = energy_split(mesh, w);
            EXPECT_GE(s.interior, e0 * (1.0 - 1e-12));
        }
    }
}

TEST(HarmonicExtend, LevelZeroHasNoInterior) {
    const auto mesh = build_mesh(0);
    const BoundaryData f{0, Eigen::Vector3d(1, -2, 3)};
    EXPECT_EQ(harmonic_extend(mesh, f), Eigen::VectorXd(f.values));
}

TEST(HarmonicExtend, Errors) {
    const auto& mesh = mesh3();
    EXPECT_THROW(harmonic_extend(mesh, BoundaryData{2, Eigen::VectorXd::Zero(192)}), ArgumentError);
    EXPECT_THROW(harmonic_extend(mesh, BoundaryData{3, Eigen::VectorXd::Zero(191)}), ArgumentError);
    EXPECT_THROW(HarmonicExtender(mesh, 0.0), ArgumentError);
}

TEST(EnergySplit, Examples) {
    std::mt19937_64 rng(4);
    const auto& mesh = mesh3();
    const auto n = static_cast<Eigen::Index>(mesh.num_vertices());
    const auto c = energy_split(mesh, Eigen::VectorXd::Constant(n, 4.0));
    EXPECT_EQ(c.interior, 0.0);
    EXPECT_EQ(c.boundary, 0.0);

    Eigen::VectorXd spike = Eigen::VectorXd::Zero(n);
    spike[static_cast<Eigen::Index>(mesh.interior_vertices()[5])] = 1.0;
    const auto s = energy_split(mesh, spike, 3.0);
    EXPECT_EQ(s.boundary, 0.0);
    EXPECT_EQ(s.interior, 6.0);

    std::normal_distribution<double> g;
    for (int trial = 0; trial < 10; ++trial) {
        Eigen::VectorXd u(n);
        for (auto& x : u) x = g(rng);
        const auto e = energy_split(mesh, u, 0.5);
        const double total = energy(mesh, u, 0.5);
        EXPECT_NEAR(e.interior + e.boundary, total, 1e-12 * total);
    }
    EXPECT_THROW(energy_split(mesh, Eigen::VectorXd::Zero(3)), ArgumentError);
}

TEST(DecayProfile, AlternatingDataDecays) {
    const auto& mesh = mesh3();
    const auto u = harmonic_extend(mesh, alternating_boundary_data(mesh));
    const auto prof = decay_profile(mesh, u);
    ASSERT_GE(prof.size(), 3u);
    for (std::size_t d = 0; d < prof.size(); ++d) EXPECT_EQ(prof[d].distance, d + 1);
    for (std::size_t d = 1; d < 3; ++d) EXPECT_LT(prof[d].sup, prof[d - 1].sup) << "shell " << d + 1;
    EXPECT_LT(prof[0].sup, 1.0);
}

TEST(DecayProfile, AlternatingDataAlternates) {
    const auto& mesh = mesh3();
    const auto f = alternating_boundary_data(mesh);
    const auto cyc = boundary_cycle(mesh);
    ASSERT_EQ(cyc.size() % 2, 0u);
    const auto& bnd = mesh.boundary_vertices();
    for (std::size_t k = 0; k < cyc.size(); ++k) {
        const auto slot = std::find(bnd.begin(), bnd.end(), cyc[k]) - bnd.begin();
        EXPECT_EQ(f.values[slot], k % 2 == 0 ? 1.0 : -1.0);
    }
}

TEST(DecayProfile, ConstantIsFlat) {
    const auto& mesh = mesh3();
    const auto prof = decay_profile(mesh, Eigen::VectorXd::Ones(static_cast<Eigen::Index>(mesh.num_vertices())));
    std::size_t count = 0;
    for (const auto& s : prof) {
        EXPECT_EQ(s.sup, 1.0);
        count += s.count;
    }
    EXPECT_EQ(count, mesh.interior_vertices().size());
}

TEST(DecayProfile, PointDataDecays) {
    const auto& mesh = mesh3();
    // A degree-5 boundary vertex; tips have no interior neighbours.
    const auto& bnd = mesh.boundary_vertices();
    const auto slot = std::find_if(bnd.begin(), bnd.end(), [&](auto v) { return mesh.degree(v) == 5; }) - bnd.begin();
    BoundaryData f{3, Eigen::VectorXd::Zero(192)};
    f.values[slot] = 1.0;
    const auto prof = decay_profile(mesh, harmonic_extend(mesh, f));
    for (std::size_t d = 1; d < prof.size(); ++d) EXPECT_LE(prof[d].sup, prof[d - 1].sup + 1e-15);
    EXPECT_LT(prof.back().sup, prof.front().sup);
}

TEST(HarmonicExtend, HighFrequencyDataIsDamped) {
    const auto& mesh = mesh3();
    const auto spec = eig_full(assemble(mesh, OperatorKind::boundary));
    const HarmonicExtender ext(mesh);
    auto ratio = [&](Eigen::Index j) {
        const auto u = ext.extend(BoundaryData{3, spec.eigenvectors.col(j)});
        const auto s = energy_split(mesh, u);
        return s.interior / s.boundary;
    };
    EXPECT_LT(ratio(spec.size() - 1), ratio(1));
}
