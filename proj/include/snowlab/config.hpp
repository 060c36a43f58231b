#pragma once

#include "errors.hpp"
#include "operator.hpp"
#include "solver.hpp"

#include <json.hpp>

#include <cstdint>
#include <cstdio>
#include <string>

namespace snowlab {

enum class SolverKind { dense, iterative };

inline std::string to_string(SolverKind s) { return s == SolverKind::dense ? "dense" : "iterative"; }

inline SolverKind parse_solver_kind(std::string_view s) {
    if (s == "dense") return SolverKind::dense;
    if (s == "iterative") return SolverKind::iterative;
    throw ArgumentError("unknown solver '" + std::string(s) + "'");
}

/// Everything a CLI run depends on.
struct RunConfig {
    int level = 2;
    OperatorKind kind = OperatorKind::full;
    double c0 = 1.0;
    SolverKind solver = SolverKind::dense;
    Eigen::Index k = 10;
    Which which = Which::smallest;
    double eps = 0.01;
    std::string out = ".";
    std::uint64_t seed = 1;

    void validate() const {
        if (level < 0) throw ArgumentError("--level must be nonnegative");
        check_c0(c0);
        if (k < 1) throw ArgumentError("--k must be positive");
        if (!(eps > 0.0)) throw ArgumentError("--eps must be positive");
        if (out.empty()) throw ArgumentError("--out must not be empty");
    }

    friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

inline nlohmann::ordered_json to_json(const RunConfig& c) {
    nlohmann::ordered_json j;
    j["level"] = c.level;
    j["kind"] = to_string(c.kind);
    j["c0"] = c.c0;
    j["solver"] = to_string(c.solver);
    j["k"] = c.k;
    j["which"] = to_string(c.which);
    j["eps"] = c.eps;
    j["out"] = c.out;
    j["seed"] = c.seed;
    return j;
}

inline RunConfig run_config_from_json(const nlohmann::json& j) {
    try {
        RunConfig c;
        c.level = j.at("level").get<int>();
        c.kind = parse_operator_kind(j.at("kind").get<std::string>());
        c.c0 = j.at("c0").get<double>();
        c.solver = parse_solver_kind(j.at("solver").get<std::string>());
        c.k = j.at("k").get<Eigen::Index>();
        c.which = parse_which(j.at("which").get<std::string>());
        c.eps = j.at("eps").get<double>();
        c.out = j.at("out").get<std::string>();
        c.seed = j.at("seed").get<std::uint64_t>();
        c.validate();
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw ArgumentError(std::string("run config: ") + e.what());
    }
}

/// FNV-1a 64 over the canonical JSON dump, as 16 hex digits.
inline std::string config_hash(const RunConfig& c) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : to_json(c).dump()) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace snowlab
