// snowlab command-line driver. Every subcommand writes its outputs plus a
// run.json manifest into --out; identical configs give identical bytes.

#include <snowlab/snowlab.hpp>

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <string>

namespace fs = std::filesystem;
using namespace snowlab;

namespace {

struct Options {
    RunConfig config;
    std::string kind = "full";
    std::string solver = "dense";
    std::string which = "smallest";
    std::string boundary_data;
    std::string function = "bump";
    Eigen::Index index = 0;
};

int guard_level() {
    const char* env = std::getenv("SNOWLAB_GUARD_LEVEL");
    if (!env || !*env) return kDefaultMaxLevel;
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (*end != '\0' || v < 0 || v > 12) throw ArgumentError("SNOWLAB_GUARD_LEVEL must be an integer in 0..12");
    return static_cast<int>(v);
}

std::ofstream open_out(const RunConfig& c, const std::string& name, bool binary = false) {
    const fs::path path = fs::path(c.out) / name;
    std::ofstream os(path, binary ? std::ios::binary : std::ios::out);
    if (!os) throw ArgumentError("cannot write " + path.string());
    return os;
}

void write_json(const RunConfig& c, const std::string& name, const ordered_json& j) {
    auto os = open_out(c, name);
    os << j.dump(2) << '\n';
}

void write_manifest(const RunConfig& c, const std::string& command, const std::vector<std::string>& outputs) {
    ordered_json j;
    j["tool"] = "snowlab";
    j["version"] = SNOWLAB_VERSION;
    j["command"] = command;
    j["config"] = to_json(c);
    j["config_hash"] = config_hash(c);
    j["outputs"] = outputs;
    write_json(c, "run.json", j);
}

SolverOptions solver_options(const RunConfig& c) {
    SolverOptions o;
    o.seed = c.seed;
    return o;
}

Spectrum solve(const OperatorBundle& op, const RunConfig& c) {
    if (c.solver == SolverKind::dense) return eig_full(op, solver_options(c));
    return eig_partial(op, c.k, c.which, solver_options(c));
}

Spectrum solve_full(const OperatorBundle& op, const RunConfig& c) { return eig_full(op, solver_options(c)); }

// ------------------------------------------------------------- subcommands

void run_mesh(const RunConfig& c) {
    const auto mesh = build_mesh(c.level, guard_level());
    const auto report = validate(mesh);
    {
        auto os = open_out(c, "mesh.json");
        write_mesh_json(os, mesh);
    }
    ordered_json v;
    v["ok"] = report.ok();
    for (const auto& chk : report.checks) {
        v["checks"].push_back({{"name", chk.name}, {"passed", chk.passed}, {"counterexamples", chk.counterexamples},
                               {"detail", chk.detail}});
    }
    write_json(c, "validation.json", v);
    write_manifest(c, "mesh", {"mesh.json", "validation.json"});
    std::cout << "level " << mesh.level() << "\nvertices " << mesh.num_vertices() << "\nboundary "
              << mesh.boundary_vertices().size() << "\ninterior " << mesh.interior_vertices().size() << "\ntriangles "
              << mesh.num_triangles() << "\nedges " << mesh.num_edges() << "\nvalid " << (report.ok() ? "yes" : "no")
              << '\n';
    if (!report.ok()) throw NumericalError("mesh failed validation");
}

void run_assemble(const RunConfig& c) {
    const auto mesh = build_mesh(c.level, guard_level());
    const auto op = assemble(mesh, c.kind, c.c0);
    {
        auto os = open_out(c, "stiffness.mtx");
        write_matrix_market(os, op.stiffness);
    }
    {
        auto os = open_out(c, "mass.csv");
        write_mass_csv(os, op.mass);
    }
    {
        auto os = open_out(c, "vertex_map.csv");
        os << "index,vertex\n";
        for (std::size_t i = 0; i < op.vertex_map.size(); ++i) os << i + 1 << ',' << op.vertex_map[i] << '\n';
    }
    write_manifest(c, "assemble", {"stiffness.mtx", "mass.csv", "vertex_map.csv"});
    std::cout << "kind " << to_string(op.kind) << "\ndimension " << op.dimension() << "\nnonzeros "
              << op.stiffness.nonZeros() << '\n';
}

void run_eig(const RunConfig& c) {
    const auto mesh = build_mesh(c.level, guard_level());
    const auto spec = solve(assemble(mesh, c.kind, c.c0), c);
    {
        auto os = open_out(c, "eigenvalues.csv");
        write_eigenvalues_csv(os, spec);
    }
    {
        auto os = open_out(c, "eigenvectors.bin", true);
        write_vectors_binary(os, spec.eigenvectors);
    }
    write_json(c, "eigenvectors.json", spectrum_sidecar(spec));
    write_manifest(c, "eig", {"eigenvalues.csv", "eigenvectors.bin", "eigenvectors.json"});
    std::cout << "method " << spec.method << "\npairs " << spec.size() << " of " << spec.dimension << '\n';
    const Eigen::Index show = std::min<Eigen::Index>(spec.size(), 10);
    for (Eigen::Index j = 0; j < show; ++j) {
        std::cout << spec.first_index + j << ' ' << format_double(spec.eigenvalues[j]) << '\n';
    }
}

void run_count(const RunConfig& c) {
    const auto mesh = build_mesh(c.level, guard_level());
    const auto full = solve_full(assemble(mesh, OperatorKind::full, c.c0), c);
    const auto dir = solve_full(assemble(mesh, OperatorKind::dirichlet, c.c0), c);
    {
        auto os = open_out(c, "counting.csv");
        write_counting_csv(os, full, dir);
    }
    const auto regime = regime_threshold(full, dir);
    std::optional<SlopeReport> slopes;
    try {
        slopes = loglog_slopes(full, regime.lambda_star);
    } catch (const ArgumentError&) {
        // too few eigenvalues in a regime at this level
    }
    auto rj = regime_to_json(regime, slopes ? &*slopes : nullptr);
    auto& flagged = rj["multiplicity_flagged"] = ordered_json::array();
    for (const auto& g : multiplicity_groups(full)) {
        if (g.size > 2) flagged.push_back({{"first_index", g.first_index}, {"size", g.size}, {"value", g.value}});
    }
    write_json(c, "regime.json", rj);
    write_json(c, "pairing.json",
               pairing_to_json(pair_eigenvectors(full, dir, mesh, c.k, {std::min<Eigen::Index>(full.size(), 4 * c.k),
                                                                         std::min<Eigen::Index>(dir.size(), 4 * c.k)})));
    write_manifest(c, "count", {"counting.csv", "regime.json", "pairing.json"});
    std::cout << "lambda_star " << format_double(regime.lambda_star) << " (dirichlet index " << regime.dirichlet_index
              << ")\nnearest " << format_double(regime.lambda_nearest) << " (full index " << regime.index_star
              << ")\nlargest " << format_double(full.eigenvalues[full.size() - 1]) << '\n';
    if (slopes) {
        std::cout << "slopes " << format_double(slopes->low_slope) << ' ' << format_double(slopes->high_slope) << '\n';
    }
}

void run_landscape(const RunConfig& c) {
    const auto mesh = build_mesh(c.level, guard_level());
    const auto op = assemble(mesh, c.kind, c.c0);
    const auto u = landscape(op);
    {
        auto os = open_out(c, "landscape.csv");
        os << "vertex,degree,boundary,value\n";
        for (Eigen::Index r = 0; r < u.values.size(); ++r) {
            const auto v = u.vertex_map[static_cast<std::size_t>(r)];
            os << v << ',' << mesh.degree(v) << ',' << (mesh.is_boundary(v) ? 1 : 0) << ','
               << format_double(u.values[r]) << '\n';
        }
    }
    std::set<double> interior, boundary;
    for (Eigen::Index r = 0; r < u.values.size(); ++r) {
        (mesh.is_boundary(u.vertex_map[static_cast<std::size_t>(r)]) ? boundary : interior).insert(u.values[r]);
    }
    ordered_json j;
    j["interior_values"] = interior;
    j["boundary_values"] = boundary;
    if (c.kind == OperatorKind::full && c.c0 == 1.0) {
        const auto cf = landscape_closed_form(c.level);
        j["closed_form"] = {{"interior", cf.interior}, {"boundary_tip", cf.boundary_tip},
                            {"boundary_base", cf.boundary_base}};
        bool match = true;
        for (Eigen::Index r = 0; r < u.values.size(); ++r) {
            const auto v = u.vertex_map[static_cast<std::size_t>(r)];
            const auto expect = !mesh.is_boundary(v) ? cf.interior
                                : mesh.degree(v) == 2 ? cf.boundary_tip
                                                      : cf.boundary_base;
            match = match && u.values[r] == static_cast<double>(expect);
        }
        j["closed_form_match"] = match;
    }
    const auto spec = solve(op, c);
    const auto bound = landscape_bound_check(spec, u);
    j["eigenpairs_checked"] = bound.checked;
    j["not_applicable"] = bound.not_applicable;
    auto& viol = j["violations"] = ordered_json::array();
    for (const auto& v : bound.violations) {
        viol.push_back({{"index", v.eigen_index}, {"row", v.row}, {"value", v.value}, {"bound", v.bound}});
    }
    write_json(c, "landscape.json", j);
    write_manifest(c, "landscape", {"landscape.csv", "landscape.json"});
    std::cout << "interior";
    for (double x : interior) std::cout << ' ' << format_double(x);
    std::cout << "\nboundary";
    for (double x : boundary) std::cout << ' ' << format_double(x);
    std::cout << "\nchecked " << bound.checked << "\nviolations " << bound.violations.size() << '\n';
}

void run_localize(const RunConfig& c, Eigen::Index index) {
    const auto mesh = build_mesh(c.level, guard_level());
    const auto spec = solve(assemble(mesh, OperatorKind::full, c.c0), c);
    const auto report = localization_report(spec, mesh, c.eps);
    {
        auto os = open_out(c, "localization.csv");
        write_localization_csv(os, report);
    }
    {
        auto os = open_out(c, "distance_profile.csv");
        os << "index,distance,mass\n";
        for (const auto& e : report.entries) {
            for (std::size_t d = 0; d < e.distance_mass.size(); ++d) {
                os << e.index << ',' << d << ',' << format_double(e.distance_mass[d]) << '\n';
            }
        }
    }
    const Eigen::Index want = index > 0 ? index : spec.first_index + spec.size() - 1;
    const Eigen::Index pos = want - spec.first_index;
    if (pos < 0 || pos >= spec.size()) {
        throw ArgumentError("--index " + std::to_string(want) + " is outside the computed eigenpairs");
    }
    {
        auto os = open_out(c, "contour.csv");
        write_contour_csv(os, mesh, spec, pos, c.eps);
    }
    write_manifest(c, "localize", {"localization.csv", "distance_profile.csv", "contour.csv"});
    const auto& e = report.entries[static_cast<std::size_t>(pos)];
    std::cout << "index " << e.index << "\neigenvalue " << format_double(e.eigenvalue) << "\nbmf "
              << format_double(e.boundary_mass_fraction) << "\nzero " << e.zero_count << "\npositive "
              << e.positive_count << "\nnegative " << e.negative_count << '\n';
}

void run_extend(const RunConfig& c, const std::string& data_path) {
    const auto mesh = build_mesh(c.level, guard_level());
    BoundaryData f;
    if (data_path.empty()) {
        f = alternating_boundary_data(mesh);
    } else {
        std::ifstream is(data_path);
        if (!is) throw ArgumentError("cannot read " + data_path);
        f = read_boundary_csv(is, mesh);
    }
    const auto u = harmonic_extend(mesh, f, c.c0);
    {
        auto os = open_out(c, "extension.bin", true);
        write_vectors_binary(os, u);
    }
    auto side = vectors_sidecar(OperatorKind::full, c.level, c.c0, u.size(), 1, 1);
    side.erase("first_index");
    side["normalization"] = "none";
    side["sign_rule"] = "none";
    write_json(c, "extension.json", side);
    {
        auto os = open_out(c, "decay.csv");
        os << "distance,sup,count\n";
        for (const auto& s : decay_profile(mesh, u)) os << s.distance << ',' << format_double(s.sup) << ',' << s.count << '\n';
    }
    const auto split = energy_split(mesh, u, c.c0);
    write_json(c, "energy.json", ordered_json{{"interior", split.interior}, {"boundary", split.boundary},
                                              {"total", split.total()}});
    write_manifest(c, "extend", {"extension.bin", "extension.json", "decay.csv", "energy.json"});
    std::cout << "interior_energy " << format_double(split.interior) << "\nboundary_energy "
              << format_double(split.boundary) << '\n';
}

PlaneFunction named_function(const std::string& name) {
    if (name == "one") return [](double, double) { return 1.0; };
    if (name == "x") return [](double x, double) { return x; };
    if (name == "bump") {
        return [](double x, double y) { return std::max(0.0, 0.2 - std::hypot(x - 0.5, y - std::sqrt(3.0) / 6.0)); };
    }
    throw ArgumentError("unknown --function '" + name + "' (one, x, bump)");
}

void run_energy_seq(const RunConfig& c, const std::string& function) {
    const auto f = named_function(function);
    const int guard = guard_level();
    const auto total = energy_sequence(f, c.level, c.c0, EnergyPart::total, guard);
    const auto inner = energy_sequence(f, c.level, c.c0, EnergyPart::interior, guard);
    const auto outer = energy_sequence(f, c.level, c.c0, EnergyPart::boundary, guard);
    auto os = open_out(c, "energy_sequence.csv");
    os << "level,total,interior,boundary\n";
    for (std::size_t n = 0; n < total.size(); ++n) {
        os << n << ',' << format_double(total[n]) << ',' << format_double(inner[n]) << ',' << format_double(outer[n])
           << '\n';
        std::cout << n << ' ' << format_double(total[n]) << ' ' << format_double(inner[n]) << ' '
                  << format_double(outer[n]) << '\n';
    }
    write_manifest(c, "energy-seq", {"energy_sequence.csv"});
}

std::string one_line(std::string s) {
    for (auto& ch : s) {
        if (ch == '\n' || ch == '\r') ch = ' ';
    }
    return s;
}

int exit_code(const Error& e) {
    if (dynamic_cast<const ArgumentError*>(&e)) return 2;
    if (dynamic_cast<const ResourceError*>(&e)) return 3;
    return 4;
}

int fail(const std::string& category, const std::string& message, int code) {
    std::cerr << "snowlab: error=" << category << " message=" << one_line(message) << '\n';
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spectral analysis of Koch snowflake pre-fractal meshes"};
    app.set_version_flag("--version", SNOWLAB_VERSION);
    app.require_subcommand(1);

    Options o;
    auto common = [&o](CLI::App* sub) {
        sub->add_option("--level", o.config.level, "Mesh level n")->capture_default_str();
        sub->add_option("--kind", o.kind, "full, dirichlet or boundary")->capture_default_str();
        sub->add_option("--c0", o.config.c0, "Boundary coupling constant")->capture_default_str();
        sub->add_option("--solver", o.solver, "dense or iterative")->capture_default_str();
        sub->add_option("--k", o.config.k, "Pairs for the iterative solver, or pairs to report")->capture_default_str();
        sub->add_option("--which", o.which, "smallest or largest (iterative solver)")->capture_default_str();
        sub->add_option("--eps", o.config.eps, "Contour threshold")->capture_default_str();
        sub->add_option("--out", o.config.out, "Output directory")->capture_default_str();
        sub->add_option("--seed", o.config.seed, "Random seed")->capture_default_str();
    };

    auto* mesh = app.add_subcommand("mesh", "Build, validate and export the mesh");
    auto* assemble_cmd = app.add_subcommand("assemble", "Export the stiffness matrix and masses");
    auto* eig = app.add_subcommand("eig", "Export eigenvalues and eigenvectors");
    auto* count = app.add_subcommand("count", "Counting functions and the regime report");
    auto* land = app.add_subcommand("landscape", "Landscape vector, closed form and bound check");
    auto* loc = app.add_subcommand("localize", "Localization report and contour export");
    auto* ext = app.add_subcommand("extend", "Harmonic extension and decay profile");
    auto* eseq = app.add_subcommand("energy-seq", "Energies of a fixed function across levels");
    for (auto* s : {mesh, assemble_cmd, eig, count, land, loc, ext, eseq}) common(s);
    loc->add_option("--index", o.index, "1-based eigenpair for the contour export (default: highest computed)");
    ext->add_option("--boundary-data", o.boundary_data, "CSV boundary_index,value (default: alternating +-1)");
    eseq->add_option("--function", o.function, "one, x or bump")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail("invalid_argument", e.what(), 2);
    }

    try {
        auto& c = o.config;
        c.kind = parse_operator_kind(o.kind);
        c.solver = parse_solver_kind(o.solver);
        c.which = parse_which(o.which);
        c.validate();
        if (c.level > guard_level()) {
            throw ResourceError("level " + std::to_string(c.level) + " exceeds the guard " +
                                std::to_string(guard_level()) + " (set SNOWLAB_GUARD_LEVEL to raise it)");
        }
        fs::create_directories(c.out);

        if (mesh->parsed()) run_mesh(c);
        else if (assemble_cmd->parsed()) run_assemble(c);
        else if (eig->parsed()) run_eig(c);
        else if (count->parsed()) run_count(c);
        else if (land->parsed()) run_landscape(c);
        else if (loc->parsed()) run_localize(c, o.index);
        else if (ext->parsed()) run_extend(c, o.boundary_data);
        else if (eseq->parsed()) run_energy_seq(c, o.function);
        return 0;
    } catch (const Error& e) {
        return fail(e.category(), e.what(), exit_code(e));
    } catch (const fs::filesystem_error& e) {
        return fail("invalid_argument", e.what(), 2);
    } catch (const std::bad_alloc&) {
        return fail("resource_guard", "out of memory", 3);
    } catch (const std::exception& e) {
        return fail("numerical_failure", e.what(), 4);
    }
}
