#pragma once

// Generalized symmetric eigenproblem S x = lambda M x with diagonal M,
// solved through the congruent symmetric matrix D = M^{-1/2} S M^{-1/2}.
// Eigenvectors are returned in the original variables, M-orthonormal and
// sign-fixed so that outputs are reproducible.

#include "errors.hpp"
#include "operator.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace snowlab {

/// Dense path refuses matrices larger than this unless told otherwise
/// (n = 4 full has dimension 5557).
inline constexpr Eigen::Index kDefaultDenseGuard = 6000;

enum class DenseBackend { automatic, lapack, eigen };

struct SolverOptions {
    double residual_tol = 1e-8;          // ||S phi - lambda M phi||_inf <= tol * max(1, lambda)
    Eigen::Index dense_guard = kDefaultDenseGuard;
    DenseBackend dense_backend = DenseBackend::automatic;
    Eigen::Index block_size = 3;         // iterative path
    Eigen::Index max_subspace = 0;       // iterative path; 0 = automatic
    std::uint64_t seed = 20190611u;      // iterative start block
};

enum class Which { smallest, largest };

inline std::string to_string(Which w) { return w == Which::smallest ? "smallest" : "largest"; }

inline Which parse_which(std::string_view s) {
    if (s == "smallest") return Which::smallest;
    if (s == "largest") return Which::largest;
    throw ArgumentError("unknown eigenvalue window '" + std::string(s) + "'");
}

struct Spectrum {
    OperatorKind kind = OperatorKind::full;
    int level = 0;
    double c0 = 1.0;
    std::vector<std::size_t> vertex_map;
    Eigen::VectorXd mass;
    Eigen::Index dimension = 0;      // operator dimension
    Eigen::Index first_index = 1;    // 1-based position of eigenvalues[0] in the full ordering
    Eigen::VectorXd eigenvalues;     // ascending, repeated by multiplicity
    Eigen::MatrixXd eigenvectors;    // column j belongs to eigenvalues[j]
    std::vector<double> residuals;   // ||S phi - lambda M phi||_inf
    std::string method;

    Eigen::Index size() const noexcept { return eigenvalues.size(); }
    bool complete() const noexcept { return size() == dimension; }
};

inline constexpr const char* kNormalizationRule = "m-orthonormal";
inline constexpr const char* kSignRule = "max-abs-entry-positive-lowest-index";

/// Square roots of the inverse masses (3^n or 2^n, exact).
inline Eigen::VectorXd inv_sqrt_mass(const OperatorBundle& op) { return op.inv_mass.cwiseSqrt(); }

/// D = M^{-1/2} S M^{-1/2}.
inline SparseMatrix symmetrize(const OperatorBundle& op) {
    const Eigen::VectorXd s = inv_sqrt_mass(op);
    SparseMatrix d = s.asDiagonal() * op.stiffness * s.asDiagonal();
    d.makeCompressed();
    return d;
}

/// Largest absolute row sum of D; an upper bound for its spectral radius.
inline double gershgorin_bound(const SparseMatrix& d) {
    Eigen::VectorXd rows = Eigen::VectorXd::Zero(d.rows());
    for (Eigen::Index col = 0; col < d.outerSize(); ++col) {
        for (SparseMatrix::InnerIterator it(d, col); it; ++it) rows[it.row()] += std::abs(it.value());
    }
    return rows.size() ? rows.maxCoeff() : 0.0;
}

/// Flips v so that its largest-magnitude entry is positive. Entries within a
/// relative 1e-12 of the maximum tie, and the lowest index among them decides.
inline void fix_sign(Eigen::Ref<Eigen::VectorXd> v) {
    if (v.size() == 0) return;
    const double top = v.cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (std::abs(v[i]) >= top * (1.0 - 1e-12)) {
            if (v[i] < 0) v = -v;
            return;
        }
    }
}

namespace detail {

// Turns D-space eigenpairs into the published Spectrum form and enforces the
// residual contract.
inline Spectrum finalize(const OperatorBundle& op, Eigen::VectorXd values, const Eigen::MatrixXd& y,
                         Eigen::Index first_index, std::string method, const SolverOptions& opts,
                         double zero_floor) {
    Spectrum spec;
    spec.kind = op.kind;
    spec.level = op.level;
    spec.c0 = op.c0;
    spec.vertex_map = op.vertex_map;
    spec.mass = op.mass;
    spec.dimension = op.dimension();
    spec.first_index = first_index;
    spec.method = std::move(method);

    // The operators are positive semidefinite; roundoff-level values are the kernel.
    for (auto& v : values) {
        if (std::abs(v) < zero_floor) v = 0.0;
    }

    const Eigen::VectorXd s = inv_sqrt_mass(op);
    spec.eigenvectors = s.asDiagonal() * y;
    spec.residuals.resize(static_cast<std::size_t>(values.size()));
    double worst = 0.0;
    Eigen::Index worst_at = -1;
    for (Eigen::Index j = 0; j < values.size(); ++j) {
        auto phi = spec.eigenvectors.col(j);
        phi /= std::sqrt((op.mass.array() * phi.array().square()).sum());
        fix_sign(phi);
        const Eigen::VectorXd r = op.stiffness * phi - values[j] * op.mass.cwiseProduct(phi);
        const double res = r.cwiseAbs().maxCoeff();
        spec.residuals[static_cast<std::size_t>(j)] = res;
        const double ratio = res / std::max(1.0, std::abs(values[j]));
        if (ratio > worst) {
            worst = ratio;
            worst_at = j;
        }
    }
    spec.eigenvalues = std::move(values);
    if (worst > opts.residual_tol) {
        std::ostringstream msg;
        msg.precision(6);
        msg << "eigenpair " << first_index + worst_at << " has relative residual " << worst << " above tolerance "
            << opts.residual_tol;
        throw NumericalError(msg.str());
    }
    return spec;
}

}  // namespace detail

namespace detail {

// In-place dsyevd: a becomes the eigenvectors, w the ascending eigenvalues.
inline lapack_int dsyevd(Eigen::MatrixXd& a, Eigen::VectorXd& w) {
    w.resize(a.rows());
    return LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', static_cast<lapack_int>(a.rows()), a.data(),
                          static_cast<lapack_int>(a.rows()), w.data());
}

// Some optimized BLAS builds return wrong products on CPUs they misdetect
// (OpenBLAS 0.3.20 with its Cooperlake kernels, for one). Solve a path-graph
// Laplacian large enough to reach the blocked code paths and check it.
inline bool lapack_is_sound() {
    static const bool sound = [] {
        const Eigen::Index n = 128;
        Eigen::MatrixXd t = Eigen::MatrixXd::Zero(n, n);
        for (Eigen::Index i = 0; i + 1 < n; ++i) {
            t(i, i + 1) = t(i + 1, i) = -1.0;
            t(i, i) += 1.0;
            t(i + 1, i + 1) += 1.0;
        }
        Eigen::MatrixXd a = t;
        Eigen::VectorXd w;
        if (dsyevd(a, w) != 0) return false;
        const double resid = (t * a - a * w.asDiagonal()).cwiseAbs().maxCoeff();
        const double orth = (a.transpose() * a - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff();
        return resid < 1e-10 && orth < 1e-10;
    }();
    return sound;
}

}  // namespace detail

/// Full spectrum by dense symmetric eigendecomposition: LAPACK dsyevd, or
/// Eigen's tridiagonal QR when the linked LAPACK fails its self-check.
inline Spectrum eig_full(const OperatorBundle& op, const SolverOptions& opts = {}) {
    const Eigen::Index d = op.dimension();
    if (d > opts.dense_guard) {
        throw ResourceError("operator dimension " + std::to_string(d) + " exceeds dense guard " +
                            std::to_string(opts.dense_guard) + "; use eig_partial");
    }
    if (d == 0) throw ArgumentError("empty operator");
    const SparseMatrix ds = symmetrize(op);
    const double floor = 1e-10 * std::max(1.0, gershgorin_bound(ds));
    const bool use_lapack = opts.dense_backend == DenseBackend::lapack ||
                            (opts.dense_backend == DenseBackend::automatic && detail::lapack_is_sound());
    Eigen::MatrixXd a = Eigen::MatrixXd(ds);
    if (use_lapack) {
        Eigen::VectorXd w;
        const lapack_int info = detail::dsyevd(a, w);
        if (info != 0) throw NumericalError("dsyevd failed with info = " + std::to_string(info));
        return detail::finalize(op, std::move(w), a, 1, "dense-dsyevd", opts, floor);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
    if (es.info() != Eigen::Success) throw NumericalError("dense tridiagonal QR did not converge");
    a.resize(0, 0);
    return detail::finalize(op, es.eigenvalues(), es.eigenvectors(), 1, "dense-tridiagonal-qr", opts, floor);
}

namespace detail {

// Appends the columns of w to basis[:, 0..used) after two passes of classical
// Gram-Schmidt. Columns that collapse are replaced by random directions.
inline void extend_basis(Eigen::MatrixXd& basis, Eigen::Index& used, Eigen::MatrixXd w, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss;
    const Eigen::Index d = basis.rows();
    for (Eigen::Index c = 0; c < w.cols() && used < basis.cols() && used < d; ++c) {
        Eigen::VectorXd v = w.col(c);
        for (int attempt = 0; attempt < 4; ++attempt) {
            const double before = v.norm();
            for (int pass = 0; pass < 2; ++pass) {
                const auto q = basis.leftCols(used);
                v -= q * (q.transpose() * v);
            }
            const double after = v.norm();
            if (after > 1e-10 * before && after > 0.0) {
                basis.col(used++) = v / after;
                break;
            }
            for (Eigen::Index i = 0; i < d; ++i) v[i] = gauss(rng);
        }
    }
}

// Bisects for a shift s with 0 < s - lambda_max(D) <= 1e-7 s. Positive
// definiteness of s I - D is read off the LDL^T pivots (Sylvester's law).
inline double upper_shift(const SparseMatrix& ds, double radius) {
    const Eigen::Index d = ds.rows();
    SparseMatrix id(d, d);
    id.setIdentity();
    Eigen::SimplicialLDLT<SparseMatrix> f;
    f.analyzePattern(ds);
    auto definite = [&](double s) {
        f.factorize(SparseMatrix(s * id - ds));
        return f.info() == Eigen::Success && (f.vectorD().array() > 0.0).all();
    };
    double lo = ds.diagonal().maxCoeff();  // a Rayleigh quotient, so <= lambda_max
    double hi = radius * (1.0 + 1e-3) + 1.0;
    while (hi - lo > 1e-7 * std::max(1.0, hi)) {
        const double mid = 0.5 * (lo + hi);
        (definite(mid) ? hi : lo) = mid;
    }
    return hi;
}

}  // namespace detail

/// k extremal eigenpairs by a block Krylov iteration with full
/// reorthogonalization on a shift-inverted D. Ritz pairs are extracted by a
/// Rayleigh-Ritz step with D itself over the whole Krylov basis.
inline Spectrum eig_partial(const OperatorBundle& op, Eigen::Index k, Which which, const SolverOptions& opts = {}) {
    const Eigen::Index d = op.dimension();
    if (k < 1 || k > d) {
        throw ArgumentError("requested " + std::to_string(k) + " eigenpairs from an operator of dimension " +
                            std::to_string(d));
    }
    const SparseMatrix ds = symmetrize(op);
    const double radius = gershgorin_bound(ds);

    // smallest: (D + I)^{-1};  largest: (shift I - D)^{-1} with the shift just above the spectrum.
    const double shift = which == Which::smallest ? -1.0 : detail::upper_shift(ds, radius);
    SparseMatrix shifted = which == Which::smallest ? SparseMatrix(ds) : SparseMatrix(-ds);
    {
        SparseMatrix id(d, d);
        id.setIdentity();
        shifted += (which == Which::smallest ? -shift : shift) * id;
    }
    Eigen::SimplicialLDLT<SparseMatrix> factor(shifted);
    if (factor.info() != Eigen::Success) throw NumericalError("shifted factorization failed");

    const Eigen::Index p = std::min(std::max<Eigen::Index>(opts.block_size, 1), d);
    Eigen::Index cap = opts.max_subspace > 0 ? opts.max_subspace : std::max<Eigen::Index>(10 * k, 2 * k + 60);
    if (k == d) cap = d;
    cap = std::min(std::max(cap, k + p), d);

    std::mt19937_64 rng(opts.seed);
    std::normal_distribution<double> gauss;
    Eigen::MatrixXd basis(d, cap);
    Eigen::Index used = 0;
    {
        Eigen::MatrixXd start(d, p);
        for (Eigen::Index i = 0; i < start.size(); ++i) start.data()[i] = gauss(rng);
        detail::extend_basis(basis, used, std::move(start), rng);
    }

    const double inner_tol = 0.1 * opts.residual_tol;
    Eigen::VectorXd ritz_values;
    Eigen::MatrixXd ritz_vectors;
    std::vector<double> achieved;
    Eigen::Index block_begin = 0;
    Eigen::Index next_check = std::min(cap, k + 2 * p);

    auto rayleigh_ritz = [&]() {
        const auto q = basis.leftCols(used);
        const Eigen::MatrixXd dq = ds * q;
        Eigen::MatrixXd h = q.transpose() * dq;
        h = 0.5 * (h + h.transpose()).eval();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
        const Eigen::Index off = which == Which::smallest ? 0 : used - k;
        ritz_values = es.eigenvalues().segment(off, k);
        const Eigen::MatrixXd coeffs = es.eigenvectors().middleCols(off, k);
        ritz_vectors = q * coeffs;
        const Eigen::MatrixXd resid = dq * coeffs - ritz_vectors * ritz_values.asDiagonal();
        achieved.assign(static_cast<std::size_t>(k), 0.0);
        bool ok = true;
        for (Eigen::Index j = 0; j < k; ++j) {
            const double r = resid.col(j).norm();
            achieved[static_cast<std::size_t>(j)] = r;
            if (r > inner_tol * std::max(1.0, std::abs(ritz_values[j]))) ok = false;
        }
        return ok;
    };

    while (true) {
        if (used >= next_check || used >= cap) {
            if (rayleigh_ritz()) break;
            if (used >= cap) {
                std::ostringstream msg;
                msg.precision(3);
                msg << "iterative solver did not converge within a subspace of " << cap << "; residuals:";
                for (double r : achieved) msg << ' ' << r;
                throw NumericalError(msg.str());
            }
            next_check = std::min(cap, std::max(used + p, used + used / 4));
        }
        const Eigen::MatrixXd block = basis.middleCols(block_begin, used - block_begin);
        Eigen::MatrixXd w(d, block.cols());
        for (Eigen::Index c = 0; c < block.cols(); ++c) w.col(c) = factor.solve(block.col(c));
        block_begin = used;
        detail::extend_basis(basis, used, std::move(w), rng);
        if (used == block_begin) {
            // Krylov space is invariant; continue from a fresh random block.
            Eigen::MatrixXd fresh(d, p);
            for (Eigen::Index i = 0; i < fresh.size(); ++i) fresh.data()[i] = gauss(rng);
            detail::extend_basis(basis, used, std::move(fresh), rng);
        }
    }

    const double floor = 1e-10 * std::max(1.0, radius);
    const Eigen::Index first = which == Which::smallest ? 1 : d - k + 1;
    return detail::finalize(op, std::move(ritz_values), ritz_vectors, first, "block-krylov-shift-invert", opts,
                            floor);
}

/// Column j of the spectrum as a vector (0-based position within the spectrum).
inline Eigen::VectorXd eigenvector(const Spectrum& spec, Eigen::Index j) {
    if (j < 0 || j >= spec.size()) throw ArgumentError("eigenpair position out of range");
    return spec.eigenvectors.col(j);
}

}  // namespace snowlab
