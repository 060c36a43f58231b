#pragma once

// Quantities derived from spectra: counting functions, the regime change,
// log-log growth rates, multiplicities, full/Dirichlet eigenvector pairing,
// boundary localization and the high-frequency landscape bound.

#include "errors.hpp"
#include "lattice.hpp"
#include "operator.hpp"
#include "solver.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

namespace snowlab {

/// N(x) = #{lambda <= x}, counted with multiplicity.
/// For a partial spectrum the answer is only defined inside the computed window.
inline Eigen::Index counting_function(const Spectrum& spec, double x) {
    const auto* begin = spec.eigenvalues.data();
    const auto* end = begin + spec.eigenvalues.size();
    const auto inside = static_cast<Eigen::Index>(std::upper_bound(begin, end, x) - begin);
    if (spec.complete()) return inside;
    if (spec.first_index > 1) {
        if (inside == 0) throw ArgumentError("counting function queried below a partial spectrum window");
        return spec.first_index - 1 + inside;
    }
    if (inside == spec.size()) throw ArgumentError("counting function queried above a partial spectrum window");
    return inside;
}

namespace detail {

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double sse = 0.0;
    bool degenerate = false;
};

// Running sums for least-squares lines through (x, y).
struct FitSums {
    double n = 0, sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;

    void add(double x, double y) {
        n += 1;
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        syy += y * y;
    }
    FitSums operator-(const FitSums& o) const {
        return {n - o.n, sx - o.sx, sy - o.sy, sxx - o.sxx, sxy - o.sxy, syy - o.syy};
    }
    LineFit fit() const {
        LineFit f;
        const double cxx = sxx - sx * sx / n;
        const double cxy = sxy - sx * sy / n;
        const double cyy = syy - sy * sy / n;
        if (!(cxx > 1e-14 * std::max(1.0, sxx))) {
            f.degenerate = true;
            f.intercept = sy / n;
            f.sse = std::max(0.0, cyy);
            return f;
        }
        f.slope = cxy / cxx;
        f.intercept = (sy - f.slope * sx) / n;
        f.sse = std::max(0.0, cyy - cxy * cxy / cxx);
        return f;
    }
};

inline void require_complete(const Spectrum& s, const char* what) {
    if (s.size() == 0) throw ArgumentError(std::string(what) + ": empty spectrum");
    if (!s.complete()) throw ArgumentError(std::string(what) + ": requires a complete spectrum");
}

}  // namespace detail

struct RegimeOptions {
    Eigen::Index burn_in = 20;     // lowest eigenvalues excluded from log-log fits
    Eigen::Index min_points = 10;  // per fitted segment
};

struct RegimeReport {
    double lambda_star = 0.0;          // largest Dirichlet eigenvalue
    Eigen::Index dirichlet_index = 0;  // its 1-based index
    Eigen::Index index_star = 0;       // 1-based index of the nearest full eigenvalue
    double lambda_nearest = 0.0;
    // Breakpoint of a two-segment least-squares fit of log N against log lambda.
    double kink_lambda = std::numeric_limits<double>::quiet_NaN();
    Eigen::Index kink_index = 0;       // last index of the lower segment
    bool kink_degenerate = false;      // fewer than min_points full eigenvalues above lambda_star
};

/// Locates the regime change of the full counting function two ways: the
/// largest Dirichlet eigenvalue (and the nearest full eigenvalue), and the
/// kink of a two-segment log-log fit of the full counting function.
inline RegimeReport regime_threshold(const Spectrum& full, const Spectrum& dirichlet, const RegimeOptions& opts = {}) {
    detail::require_complete(full, "regime_threshold");
    detail::require_complete(dirichlet, "regime_threshold");
    if (full.level != dirichlet.level) throw ArgumentError("regime_threshold: spectra from different levels");

    RegimeReport r;
    r.lambda_star = dirichlet.eigenvalues[dirichlet.size() - 1];
    r.dirichlet_index = dirichlet.size();
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < full.size(); ++i) {
        if (std::abs(full.eigenvalues[i] - r.lambda_star) < std::abs(full.eigenvalues[best] - r.lambda_star)) best = i;
    }
    r.index_star = best + 1;
    r.lambda_nearest = full.eigenvalues[best];

    const Eigen::Index above = full.size() - counting_function(full, r.lambda_star);
    r.kink_degenerate = above < opts.min_points;

    std::vector<double> xs, ys;
    std::vector<Eigen::Index> idx;
    for (Eigen::Index i = opts.burn_in; i < full.size(); ++i) {
        if (full.eigenvalues[i] <= 0.0) continue;
        xs.push_back(std::log(full.eigenvalues[i]));
        ys.push_back(std::log(static_cast<double>(i + 1)));
        idx.push_back(i + 1);
    }
    const auto m = static_cast<Eigen::Index>(xs.size());
    if (m < 2 * opts.min_points) {
        r.kink_degenerate = true;
        return r;
    }
    std::vector<detail::FitSums> prefix(static_cast<std::size_t>(m) + 1);
    for (Eigen::Index i = 0; i < m; ++i) {
        prefix[static_cast<std::size_t>(i) + 1] = prefix[static_cast<std::size_t>(i)];
        prefix[static_cast<std::size_t>(i) + 1].add(xs[static_cast<std::size_t>(i)], ys[static_cast<std::size_t>(i)]);
    }
    double best_sse = std::numeric_limits<double>::infinity();
    Eigen::Index best_split = -1;
    for (Eigen::Index split = opts.min_points; split + opts.min_points <= m; ++split) {
        const auto lo = prefix[static_cast<std::size_t>(split)].fit();
        const auto hi = (prefix.back() - prefix[static_cast<std::size_t>(split)]).fit();
        if (lo.sse + hi.sse < best_sse) {
            best_sse = lo.sse + hi.sse;
            best_split = split;
        }
    }
    if (best_split > 0) {
        r.kink_index = idx[static_cast<std::size_t>(best_split) - 1];
        r.kink_lambda = full.eigenvalues[r.kink_index - 1];
    }
    return r;
}

struct SlopeReport {
    double low_slope = 0.0;
    double high_slope = 0.0;
    Eigen::Index low_points = 0;
    Eigen::Index high_points = 0;
    bool degenerate = false;  // a regime has no spread in log lambda
};

/// Least-squares slopes of log N(lambda_i) = log i against log lambda_i,
/// separately for eigenvalues at or below and above `threshold`. Zero
/// eigenvalues and the lowest `burn_in` indices are excluded.
inline SlopeReport loglog_slopes(const Spectrum& spec, double threshold, const RegimeOptions& opts = {}) {
    detail::require_complete(spec, "loglog_slopes");
    detail::FitSums low, high;
    for (Eigen::Index i = opts.burn_in; i < spec.size(); ++i) {
        const double lam = spec.eigenvalues[i];
        if (lam <= 0.0) continue;
        (lam <= threshold ? low : high).add(std::log(lam), std::log(static_cast<double>(i + 1)));
    }
    SlopeReport r;
    r.low_points = static_cast<Eigen::Index>(low.n);
    r.high_points = static_cast<Eigen::Index>(high.n);
    if (r.low_points < opts.min_points || r.high_points < opts.min_points) {
        throw ArgumentError("loglog_slopes: fewer than " + std::to_string(opts.min_points) +
                            " points in a regime (low " + std::to_string(r.low_points) + ", high " +
                            std::to_string(r.high_points) + ")");
    }
    const auto lf = low.fit();
    const auto hf = high.fit();
    r.low_slope = lf.slope;
    r.high_slope = hf.slope;
    r.degenerate = lf.degenerate || hf.degenerate;
    return r;
}

struct MultiplicityGroup {
    Eigen::Index first_index = 0;  // 1-based
    Eigen::Index size = 0;
    double value = 0.0;            // mean of the clustered eigenvalues
};

/// Clusters consecutive eigenvalues with |l_{i+1} - l_i| <= rel_tol * max(1, l_i).
inline std::vector<MultiplicityGroup> multiplicity_groups(const Spectrum& spec, double rel_tol = 1e-6) {
    if (!(rel_tol > 0.0)) throw ArgumentError("multiplicity_groups: rel_tol must be positive");
    std::vector<MultiplicityGroup> groups;
    const auto& ev = spec.eigenvalues;
    Eigen::Index i = 0;
    while (i < ev.size()) {
        Eigen::Index j = i;
        double sum = ev[i];
        while (j + 1 < ev.size() && std::abs(ev[j + 1] - ev[j]) <= rel_tol * std::max(1.0, std::abs(ev[j]))) {
            ++j;
            sum += ev[j];
        }
        groups.push_back({spec.first_index + i, j - i + 1, sum / static_cast<double>(j - i + 1)});
        i = j + 1;
    }
    return groups;
}

/// The group whose mean is closest to `value`.
inline const MultiplicityGroup& group_near(const std::vector<MultiplicityGroup>& groups, double value) {
    if (groups.empty()) throw ArgumentError("group_near: no groups");
    return *std::min_element(groups.begin(), groups.end(), [value](const auto& a, const auto& b) {
        return std::abs(a.value - value) < std::abs(b.value - value);
    });
}

struct EigenPairMatch {
    Eigen::Index full_index = 0;       // 1-based index in the first spectrum
    Eigen::Index dirichlet_index = 0;  // 1-based index in the second spectrum
    double similarity = 0.0;           // in [0, 1]
    double gap = 0.0;                  // |lambda_j - lambda~_j~|
};

struct PairingOptions {
    Eigen::Index full_window = 0;       // consider the first N pairs of the first spectrum; 0 = all
    Eigen::Index dirichlet_window = 0;  // likewise for the second spectrum
};

/// Similarity |<phi_j|_int, phi~_k>_m| with both factors normalized in the
/// m-inner product over the vertices of the second spectrum, which must be a
/// subset of the first one's. Returns the top_k pairs by similarity.
inline std::vector<EigenPairMatch> pair_eigenvectors(const Spectrum& full, const Spectrum& dirichlet, const Mesh& mesh,
                                                     Eigen::Index top_k, const PairingOptions& opts = {}) {
    const auto nv = mesh.num_vertices();
    std::vector<Eigen::Index> row_in_full(nv, -1);
    for (std::size_t r = 0; r < full.vertex_map.size(); ++r) {
        if (full.vertex_map[r] >= nv) throw ArgumentError("pair_eigenvectors: spectrum does not belong to mesh");
        row_in_full[full.vertex_map[r]] = static_cast<Eigen::Index>(r);
    }
    const auto nd = static_cast<Eigen::Index>(dirichlet.vertex_map.size());
    std::vector<Eigen::Index> rows(static_cast<std::size_t>(nd));
    for (Eigen::Index r = 0; r < nd; ++r) {
        const auto v = dirichlet.vertex_map[static_cast<std::size_t>(r)];
        if (v >= nv || row_in_full[v] < 0) throw ArgumentError("pair_eigenvectors: vertex sets are not nested");
        rows[static_cast<std::size_t>(r)] = row_in_full[v];
    }

    const Eigen::Index jf = opts.full_window > 0 ? std::min(opts.full_window, full.size()) : full.size();
    const Eigen::Index jd = opts.dirichlet_window > 0 ? std::min(opts.dirichlet_window, dirichlet.size())
                                                      : dirichlet.size();
    Eigen::MatrixXd restricted(nd, jf);
    for (Eigen::Index r = 0; r < nd; ++r) {
        restricted.row(r) = full.eigenvectors.row(rows[static_cast<std::size_t>(r)]).head(jf);
    }
    const Eigen::VectorXd& m = dirichlet.mass;
    const Eigen::MatrixXd weighted = m.asDiagonal() * dirichlet.eigenvectors.leftCols(jd);
    const Eigen::MatrixXd overlap = restricted.transpose() * weighted;  // jf x jd
    const Eigen::VectorXd norm_f =
        (restricted.array().square().colwise() * m.array()).colwise().sum().sqrt().transpose();
    const Eigen::VectorXd norm_d =
        (dirichlet.eigenvectors.leftCols(jd).array().square().colwise() * m.array()).colwise().sum().sqrt().transpose();

    std::vector<EigenPairMatch> all;
    all.reserve(static_cast<std::size_t>(jf * jd));
    for (Eigen::Index a = 0; a < jf; ++a) {
        for (Eigen::Index b = 0; b < jd; ++b) {
            const double denom = norm_f[a] * norm_d[b];
            const double sim = denom > 0.0 ? std::abs(overlap(a, b)) / denom : 0.0;
            all.push_back({full.first_index + a, dirichlet.first_index + b, std::min(sim, 1.0),
                           std::abs(full.eigenvalues[a] - dirichlet.eigenvalues[b])});
        }
    }
    const auto k = static_cast<std::size_t>(std::clamp<Eigen::Index>(top_k, 0, static_cast<Eigen::Index>(all.size())));
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(),
                      [](const EigenPairMatch& x, const EigenPairMatch& y) {
                          if (x.similarity != y.similarity) return x.similarity > y.similarity;
                          if (x.full_index != y.full_index) return x.full_index < y.full_index;
                          return x.dirichlet_index < y.dirichlet_index;
                      });
    all.resize(k);
    return all;
}

enum class ContourClass : std::int8_t { zero = 0, positive = 1, negative = -1 };

inline const char* to_string(ContourClass c) {
    switch (c) {
        case ContourClass::zero: return "zero";
        case ContourClass::positive: return "positive";
        case ContourClass::negative: return "negative";
    }
    return "zero";
}

inline ContourClass classify(double value, double eps) {
    if (std::abs(value) <= eps) return ContourClass::zero;
    return value > 0 ? ContourClass::positive : ContourClass::negative;
}

/// Eigenvector scaled so that max |phi| = 1.
inline Eigen::VectorXd max_normalized(const Eigen::VectorXd& phi) {
    const double top = phi.cwiseAbs().maxCoeff();
    return top > 0.0 ? Eigen::VectorXd(phi / top) : phi;
}

struct LocalizationEntry {
    Eigen::Index index = 0;  // 1-based
    double eigenvalue = 0.0;
    double boundary_mass_fraction = 0.0;
    std::vector<double> distance_mass;  // m-weighted squared mass per hop distance to the boundary; sums to 1
    std::size_t zero_count = 0;
    std::size_t positive_count = 0;
    std::size_t negative_count = 0;
};

struct LocalizationReport {
    double eps = 0.01;
    std::vector<LocalizationEntry> entries;
};

/// Boundary mass fraction, distance-to-boundary mass histogram and contour
/// class counts (on the max-normalized eigenvector) for every computed pair.
inline LocalizationReport localization_report(const Spectrum& spec, const Mesh& mesh, double eps = 0.01) {
    if (!(eps > 0.0)) throw ArgumentError("localization_report: eps must be positive");
    if (spec.vertex_map.size() != mesh.num_vertices()) {
        throw ArgumentError("localization_report: needs a spectrum on the full mesh");
    }
    const auto dist = boundary_distances(mesh);
    std::size_t max_dist = 0;
    for (auto d : dist) {
        if (d != std::numeric_limits<std::size_t>::max()) max_dist = std::max(max_dist, d);
    }

    LocalizationReport report;
    report.eps = eps;
    report.entries.reserve(static_cast<std::size_t>(spec.size()));
    for (Eigen::Index j = 0; j < spec.size(); ++j) {
        const auto phi = spec.eigenvectors.col(j);
        LocalizationEntry e;
        e.index = spec.first_index + j;
        e.eigenvalue = spec.eigenvalues[j];
        e.distance_mass.assign(max_dist + 1, 0.0);
        double total = 0.0;
        double on_boundary = 0.0;
        for (Eigen::Index r = 0; r < phi.size(); ++r) {
            const auto v = spec.vertex_map[static_cast<std::size_t>(r)];
            const double w = spec.mass[r] * phi[r] * phi[r];
            total += w;
            if (mesh.is_boundary(v)) on_boundary += w;
            if (dist[v] <= max_dist) e.distance_mass[dist[v]] += w;
        }
        e.boundary_mass_fraction = total > 0.0 ? on_boundary / total : 0.0;
        if (total > 0.0) {
            for (auto& x : e.distance_mass) x /= total;
        }
        const double top = phi.cwiseAbs().maxCoeff();
        for (Eigen::Index r = 0; r < phi.size(); ++r) {
            switch (classify(top > 0.0 ? phi[r] / top : 0.0, eps)) {
                case ContourClass::zero: ++e.zero_count; break;
                case ContourClass::positive: ++e.positive_count; break;
                case ContourClass::negative: ++e.negative_count; break;
            }
        }
        report.entries.push_back(std::move(e));
    }
    return report;
}

struct LandscapeVector {
    OperatorKind kind = OperatorKind::full;
    int level = 0;
    double c0 = 1.0;
    std::vector<std::size_t> vertex_map;
    Eigen::VectorXd values;  // u_i = sum_j |L_ij|
};

/// u = |L| (1, ..., 1)^T with L = M^{-1} S. For integer c0 every entry is an
/// integer below 2^53, so the values are exact.
inline LandscapeVector landscape(const OperatorBundle& op) {
    LandscapeVector u;
    u.kind = op.kind;
    u.level = op.level;
    u.c0 = op.c0;
    u.vertex_map = op.vertex_map;
    Eigen::VectorXd rows = Eigen::VectorXd::Zero(op.dimension());
    for (Eigen::Index col = 0; col < op.stiffness.outerSize(); ++col) {
        for (SparseMatrix::InnerIterator it(op.stiffness, col); it; ++it) rows[it.row()] += std::abs(it.value());
    }
    u.values = op.inv_mass.cwiseProduct(rows);
    return u;
}

/// Closed-form landscape values of the full operator with c0 = 1.
struct LandscapeClosedForm {
    std::int64_t interior = 0;       // 8 * 3^{2n+1}
    std::int64_t boundary_tip = 0;   // 2^{4n+3}, degree-2 boundary vertices
    std::int64_t boundary_base = 0;  // 2^{4n+3} + 3 * 2^{2n+2}, degree-5 boundary vertices
};

inline LandscapeClosedForm landscape_closed_form(int level) {
    return {8 * pow_int(3, 2 * level + 1), pow_int(2, 4 * level + 3),
            pow_int(2, 4 * level + 3) + 3 * pow_int(2, 2 * level + 2)};
}

struct BoundViolation {
    Eigen::Index eigen_index = 0;  // 1-based
    std::size_t row = 0;           // operator row
    double value = 0.0;            // max-normalized phi_i
    double bound = 0.0;            // u_i / lambda
};

struct LandscapeBoundReport {
    std::vector<BoundViolation> violations;
    std::vector<Eigen::Index> not_applicable;  // eigenpairs with lambda <= 0
    Eigen::Index checked = 0;

    bool verified() const { return violations.empty(); }
};

/// Checks phi_i <= u_i / lambda for every eigenpair with lambda > 0, where phi
/// is scaled to max |phi_i| = 1.
inline LandscapeBoundReport landscape_bound_check(const Spectrum& spec, const LandscapeVector& u,
                                                  double abs_tol = 1e-10) {
    if (u.values.size() != spec.dimension || u.kind != spec.kind || u.level != spec.level) {
        throw ArgumentError("landscape_bound_check: spectrum and landscape come from different operators");
    }
    LandscapeBoundReport report;
    for (Eigen::Index j = 0; j < spec.size(); ++j) {
        const double lam = spec.eigenvalues[j];
        const auto index = spec.first_index + j;
        if (!(lam > 0.0)) {
            report.not_applicable.push_back(index);
            continue;
        }
        ++report.checked;
        const Eigen::VectorXd phi = max_normalized(spec.eigenvectors.col(j));
        for (Eigen::Index i = 0; i < phi.size(); ++i) {
            const double bound = u.values[i] / lam;
            if (phi[i] > bound + abs_tol) report.violations.push_back({index, static_cast<std::size_t>(i), phi[i], bound});
        }
    }
    return report;
}

}  // namespace snowlab
