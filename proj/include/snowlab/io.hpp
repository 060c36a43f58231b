#pragma once

// File formats: mesh JSON, MatrixMarket stiffness, CSV tables, the SNWV
// binary eigenvector container and its JSON sidecar. Floating-point values
// are written in shortest round-trip form so repeated runs are byte-identical.

#include "analysis.hpp"
#include "errors.hpp"
#include "harmonic.hpp"
#include "lattice.hpp"
#include "operator.hpp"
#include "solver.hpp"

#include <json.hpp>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace snowlab {

using ordered_json = nlohmann::ordered_json;

/// Shortest decimal string that parses back to exactly `x`.
inline std::string format_double(double x) {
    std::array<char, 64> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
    return std::string(buf.data(), res.ptr);
}

// ---------------------------------------------------------------- mesh JSON

inline ordered_json mesh_to_json(const Mesh& mesh) {
    ordered_json j;
    j["level"] = mesh.level();
    auto& verts = j["vertices"] = ordered_json::array();
    for (const auto& p : mesh.vertices()) verts.push_back({p.a, p.b});
    auto& tris = j["triangles"] = ordered_json::array();
    for (const auto& t : mesh.triangles()) tris.push_back({t[0], t[1], t[2]});
    auto& edges = j["edges"] = ordered_json::array();
    for (const auto& e : mesh.edges()) edges.push_back({e.u, e.v, e.kind == EdgeKind::boundary ? "b" : "i"});
    j["boundary_vertices"] = mesh.boundary_vertices();
    return j;
}

inline void write_mesh_json(std::ostream& os, const Mesh& mesh) { os << mesh_to_json(mesh).dump() << '\n'; }

/// Parses a mesh file and rejects it unless the listed edges and boundary
/// vertices match the triangles and every mesh invariant holds.
inline Mesh mesh_from_json(const nlohmann::json& j) {
    try {
        const int level = j.at("level").get<int>();
        std::vector<LatticePoint> verts;
        for (const auto& v : j.at("vertices")) verts.push_back({v.at(0).get<std::int64_t>(), v.at(1).get<std::int64_t>()});
        std::vector<Triangle> tris;
        for (const auto& t : j.at("triangles")) {
            tris.push_back({t.at(0).get<std::size_t>(), t.at(1).get<std::size_t>(), t.at(2).get<std::size_t>()});
        }
        auto mesh = Mesh::from_parts(level, std::move(verts), std::move(tris));

        std::vector<Edge> listed;
        for (const auto& e : j.at("edges")) {
            const auto tag = e.at(2).get<std::string>();
            if (tag != "b" && tag != "i") throw ArgumentError("mesh file: edge tag must be \"b\" or \"i\"");
            listed.push_back({e.at(0).get<std::size_t>(), e.at(1).get<std::size_t>(),
                              tag == "b" ? EdgeKind::boundary : EdgeKind::interior});
        }
        if (listed != mesh.edges()) throw ArgumentError("mesh file: edge list does not match triangles");
        if (j.at("boundary_vertices").get<std::vector<std::size_t>>() != mesh.boundary_vertices()) {
            throw ArgumentError("mesh file: boundary vertex list does not match edges");
        }
        const auto report = validate(mesh);
        if (!report.ok()) {
            std::string failed;
            for (const auto& c : report.checks) {
                if (!c.passed) failed += (failed.empty() ? "" : ", ") + c.name;
            }
            throw ArgumentError("mesh file violates invariants: " + failed);
        }
        return mesh;
    } catch (const nlohmann::json::exception& e) {
        throw ArgumentError(std::string("mesh file: ") + e.what());
    }
}

inline Mesh read_mesh_json(std::istream& is) {
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ArgumentError(std::string("mesh file: ") + e.what());
    }
    return mesh_from_json(j);
}

// ------------------------------------------------------- MatrixMarket, mass

inline constexpr const char* kMatrixMarketHeader = "%%MatrixMarket matrix coordinate real symmetric";

/// Lower triangle, 1-based indices, column-major order.
inline void write_matrix_market(std::ostream& os, const SparseMatrix& a) {
    std::vector<std::string> lines;
    for (Eigen::Index col = 0; col < a.outerSize(); ++col) {
        for (SparseMatrix::InnerIterator it(a, col); it; ++it) {
            if (it.row() < col) continue;
            lines.push_back(std::to_string(it.row() + 1) + ' ' + std::to_string(col + 1) + ' ' +
                            format_double(it.value()));
        }
    }
    os << kMatrixMarketHeader << '\n' << a.rows() << ' ' << a.cols() << ' ' << lines.size() << '\n';
    for (const auto& l : lines) os << l << '\n';
}

/// Reads a symmetric coordinate file back into a full sparse matrix.
inline SparseMatrix read_matrix_market(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line.rfind(kMatrixMarketHeader, 0) != 0) {
        throw ArgumentError("MatrixMarket: missing or unsupported header");
    }
    while (std::getline(is, line) && !line.empty() && line[0] == '%') {
    }
    std::istringstream dims(line);
    Eigen::Index rows = 0, cols = 0, nnz = 0;
    if (!(dims >> rows >> cols >> nnz)) throw ArgumentError("MatrixMarket: bad size line");
    std::vector<Eigen::Triplet<double>> trip;
    for (Eigen::Index k = 0; k < nnz; ++k) {
        Eigen::Index i = 0, j = 0;
        double v = 0;
        if (!(is >> i >> j >> v)) throw ArgumentError("MatrixMarket: truncated entry list");
        if (i < 1 || j < 1 || i > rows || j > cols || i < j) throw ArgumentError("MatrixMarket: bad entry index");
        trip.emplace_back(i - 1, j - 1, v);
        if (i != j) trip.emplace_back(j - 1, i - 1, v);
    }
    SparseMatrix a(rows, cols);
    a.setFromTriplets(trip.begin(), trip.end());
    return a;
}

/// "index,mass" with 1-based indices matching the MatrixMarket rows.
inline void write_mass_csv(std::ostream& os, const Eigen::VectorXd& mass) {
    os << "index,mass\n";
    for (Eigen::Index i = 0; i < mass.size(); ++i) os << i + 1 << ',' << format_double(mass[i]) << '\n';
}

// ------------------------------------------------------------- eigenpairs

inline void write_eigenvalues_csv(std::ostream& os, const Spectrum& spec) {
    os << "index,eigenvalue,residual\n";
    for (Eigen::Index j = 0; j < spec.size(); ++j) {
        os << spec.first_index + j << ',' << format_double(spec.eigenvalues[j]) << ','
           << format_double(spec.residuals[static_cast<std::size_t>(j)]) << '\n';
    }
}

inline constexpr std::array<char, 4> kVectorMagic{'S', 'N', 'W', 'V'};
inline constexpr std::uint32_t kVectorFormatVersion = 1;

namespace detail {

template <typename T>
void put_le(std::ostream& os, T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    std::array<unsigned char, sizeof(T)> bytes{};
    std::memcpy(bytes.data(), &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
    os.write(reinterpret_cast<const char*>(bytes.data()), sizeof(T));
}

template <typename T>
T get_le(std::istream& is) {
    std::array<unsigned char, sizeof(T)> bytes{};
    if (!is.read(reinterpret_cast<char*>(bytes.data()), sizeof(T))) throw ArgumentError("vector file truncated");
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
    T value;
    std::memcpy(&value, bytes.data(), sizeof(T));
    return value;
}

}  // namespace detail

/// "SNWV", u32 version, u64 dimension d, u64 count k, then k*d float64
/// values, vector by vector; all little-endian. Columns of `vectors` are written.
inline void write_vectors_binary(std::ostream& os, const Eigen::MatrixXd& vectors) {
    os.write(kVectorMagic.data(), kVectorMagic.size());
    detail::put_le<std::uint32_t>(os, kVectorFormatVersion);
    detail::put_le<std::uint64_t>(os, static_cast<std::uint64_t>(vectors.rows()));
    detail::put_le<std::uint64_t>(os, static_cast<std::uint64_t>(vectors.cols()));
    for (Eigen::Index c = 0; c < vectors.cols(); ++c) {
        for (Eigen::Index r = 0; r < vectors.rows(); ++r) detail::put_le<double>(os, vectors(r, c));
    }
}

inline Eigen::MatrixXd read_vectors_binary(std::istream& is) {
    std::array<char, 4> magic{};
    if (!is.read(magic.data(), magic.size()) || magic != kVectorMagic) throw ArgumentError("vector file: bad magic");
    if (detail::get_le<std::uint32_t>(is) != kVectorFormatVersion) throw ArgumentError("vector file: bad version");
    const auto d = detail::get_le<std::uint64_t>(is);
    const auto k = detail::get_le<std::uint64_t>(is);
    if (d > (1ull << 32) || k > (1ull << 32)) throw ArgumentError("vector file: implausible size");
    Eigen::MatrixXd out(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(k));
    for (Eigen::Index c = 0; c < out.cols(); ++c) {
        for (Eigen::Index r = 0; r < out.rows(); ++r) out(r, c) = detail::get_le<double>(is);
    }
    return out;
}

inline ordered_json vectors_sidecar(OperatorKind kind, int level, double c0, Eigen::Index dimension,
                                    Eigen::Index count, Eigen::Index first_index) {
    ordered_json j;
    j["format"] = "SNWV";
    j["version"] = kVectorFormatVersion;
    j["kind"] = to_string(kind);
    j["level"] = level;
    j["c0"] = c0;
    j["dimension"] = dimension;
    j["count"] = count;
    j["first_index"] = first_index;
    j["normalization"] = kNormalizationRule;
    j["sign_rule"] = kSignRule;
    return j;
}

inline ordered_json spectrum_sidecar(const Spectrum& spec) {
    auto j = vectors_sidecar(spec.kind, spec.level, spec.c0, spec.dimension, spec.size(), spec.first_index);
    j["method"] = spec.method;
    return j;
}

// ---------------------------------------------------------- boundary data

inline void write_boundary_csv(std::ostream& os, const BoundaryData& f) {
    os << "boundary_index,value\n";
    for (Eigen::Index i = 0; i < f.values.size(); ++i) os << i << ',' << format_double(f.values[i]) << '\n';
}

/// Reads "boundary_index,value" rows (0-based positions in the boundary list).
inline BoundaryData read_boundary_csv(std::istream& is, const Mesh& mesh) {
    std::string line;
    if (!std::getline(is, line) || line != "boundary_index,value") {
        throw ArgumentError("boundary data: expected header 'boundary_index,value'");
    }
    const auto nb = mesh.boundary_vertices().size();
    BoundaryData f{mesh.level(), Eigen::VectorXd::Zero(static_cast<Eigen::Index>(nb))};
    std::vector<bool> seen(nb, false);
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw ArgumentError("boundary data: malformed row '" + line + "'");
        std::size_t idx = 0;
        double value = 0;
        try {
            idx = std::stoul(line.substr(0, comma));
            value = std::stod(line.substr(comma + 1));
        } catch (const std::exception&) {
            throw ArgumentError("boundary data: malformed row '" + line + "'");
        }
        if (idx >= nb || seen[idx]) throw ArgumentError("boundary data: bad or repeated index " + std::to_string(idx));
        seen[idx] = true;
        f.values[static_cast<Eigen::Index>(idx)] = value;
    }
    if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
        throw ArgumentError("boundary data: expected " + std::to_string(nb) + " values");
    }
    return f;
}

// ---------------------------------------------------------------- reports

/// Counting functions sampled at every eigenvalue of either spectrum.
inline void write_counting_csv(std::ostream& os, const Spectrum& full, const Spectrum& dirichlet) {
    std::vector<double> xs(full.eigenvalues.data(), full.eigenvalues.data() + full.size());
    xs.insert(xs.end(), dirichlet.eigenvalues.data(), dirichlet.eigenvalues.data() + dirichlet.size());
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    os << "x,N_full,N_dirichlet\n";
    for (double x : xs) {
        os << format_double(x) << ',' << counting_function(full, x) << ',' << counting_function(dirichlet, x) << '\n';
    }
}

inline ordered_json regime_to_json(const RegimeReport& r, const SlopeReport* slopes) {
    ordered_json j;
    j["lambda_star"] = r.lambda_star;
    j["dirichlet_index"] = r.dirichlet_index;
    j["index_star"] = r.index_star;
    j["lambda_nearest"] = r.lambda_nearest;
    j["kink_index"] = r.kink_index;
    j["kink_lambda"] = std::isnan(r.kink_lambda) ? ordered_json(nullptr) : ordered_json(r.kink_lambda);
    j["kink_degenerate"] = r.kink_degenerate;
    if (slopes) {
        j["low_slope"] = slopes->low_slope;
        j["high_slope"] = slopes->high_slope;
        j["low_points"] = slopes->low_points;
        j["high_points"] = slopes->high_points;
        j["slopes_degenerate"] = slopes->degenerate;
    }
    return j;
}

inline ordered_json pairing_to_json(const std::vector<EigenPairMatch>& pairs) {
    auto j = ordered_json::array();
    for (const auto& p : pairs) {
        j.push_back({{"full_index", p.full_index},
                     {"dirichlet_index", p.dirichlet_index},
                     {"similarity", p.similarity},
                     {"gap", p.gap}});
    }
    return j;
}

inline void write_localization_csv(std::ostream& os, const LocalizationReport& r) {
    os << "index,eigenvalue,bmf\n";
    for (const auto& e : r.entries) {
        os << e.index << ',' << format_double(e.eigenvalue) << ',' << format_double(e.boundary_mass_fraction) << '\n';
    }
}

/// "vertex,x,y,value,class" for one eigenvector, max-normalized.
inline void write_contour_csv(std::ostream& os, const Mesh& mesh, const Spectrum& spec, Eigen::Index position,
                              double eps, double scale = 1.0) {
    const Eigen::VectorXd phi = max_normalized(eigenvector(spec, position));
    os << "vertex,x,y,value,class\n";
    for (Eigen::Index r = 0; r < phi.size(); ++r) {
        const auto v = spec.vertex_map[static_cast<std::size_t>(r)];
        const auto p = cartesian(mesh, v, scale);
        os << v << ',' << format_double(p.x) << ',' << format_double(p.y) << ',' << format_double(phi[r]) << ','
           << to_string(classify(phi[r], eps)) << '\n';
    }
}

}  // namespace snowlab
