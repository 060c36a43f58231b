// Small tour of the library at level 2: mesh, operators, spectra, landscape
// and a harmonic extension.

#include <snowlab/snowlab.hpp>

#include <iostream>

int main() {
    using namespace snowlab;

    const Mesh mesh = build_mesh(2);
    std::cout << "level 2: " << mesh.num_vertices() << " vertices, " << mesh.boundary_vertices().size()
              << " on the boundary\n";

    const auto full = eig_full(assemble(mesh, OperatorKind::full));
    const auto dir = eig_full(assemble(mesh, OperatorKind::dirichlet));
    std::cout << "lowest full eigenvalues:";
    for (Eigen::Index j = 0; j < 6; ++j) std::cout << ' ' << format_double(full.eigenvalues[j]);
    std::cout << "\nlowest Dirichlet eigenvalue: " << format_double(dir.eigenvalues[0]) << '\n';

    const auto regime = regime_threshold(full, dir);
    std::cout << "regime threshold " << format_double(regime.lambda_star) << ", N_full = "
              << counting_function(full, regime.lambda_star) << '\n';

    const auto op = assemble(mesh, OperatorKind::full);
    const auto bound = landscape_bound_check(full, landscape(op));
    std::cout << "landscape bound: " << bound.checked << " eigenpairs, " << bound.violations.size()
              << " violations\n";

    // Top mode sits almost entirely on the boundary.
    const auto loc = localization_report(full, mesh);
    std::cout << "boundary mass fraction of the top mode: " << format_double(loc.entries.back().boundary_mass_fraction)
              << '\n';

    const auto u = harmonic_extend(mesh, alternating_boundary_data(mesh));
    std::cout << "alternating boundary data, sup by distance:";
    for (const auto& shell : decay_profile(mesh, u)) std::cout << ' ' << format_double(shell.sup);
    std::cout << '\n';
}
