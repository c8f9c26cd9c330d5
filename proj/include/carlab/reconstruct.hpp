#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "carlab/forward.hpp"
#include "carlab/grid.hpp"
#include "carlab/model.hpp"
#include "carlab/norms.hpp"
#include "carlab/operators.hpp"
#include "carlab/symmetric_eigen.hpp"
#include "carlab/util.hpp"

namespace carlab {

enum class FilterKind { Tikhonov, Truncation };

struct ReconstructOptions {
    FilterKind filter = FilterKind::Tikhonov;
    double alpha = 0.5;        // enters the reported error-rate fit, not the filter
    double noise_level = 0.0;  // delta >= 0; Tikhonov uses gamma = delta directly

    void check() const {
        if (!(alpha > 0.0 && alpha < 1.0)) {
            throw std::domain_error("ReconstructOptions: alpha must lie in (0, 1)");
        }
        if (!(noise_level >= 0.0) || !std::isfinite(noise_level)) {
            throw std::domain_error("ReconstructOptions: noise_level must be finite and >= 0");
        }
    }
};

/// Eigenpairs of the negated interior operator -A_h under Dirichlet rows
/// (ascending; positive for a dissipative operator). Euclidean-orthonormal
/// vectors over the interior unknowns.
inline EigenDecomposition operator_spectrum(const CoefficientSet& cs, const Grid& g) {
    if (!cs.time_independent) {
        throw ConfigError("operator_spectrum: coefficients must be time-independent");
    }
    DiscreteOperator op(cs, 0.0, g, BoundaryKind::Dirichlet, OperatorParts::Full);
    const BandedMatrix& A = op.matrix();
    const int n = A.size();

    // Self-adjointness is checked on the assembled matrix itself.
    double scale = 1e-300;
    double defect = 0.0;
    for (int i = 0; i < n; ++i) {
        const int jhi = std::min(n - 1, i + A.upper_bandwidth());
        for (int j = i; j <= jhi; ++j) {
            scale = std::max(scale, std::fabs(A.get(i, j)));
            defect = std::max(defect, std::fabs(A.get(i, j) - A.get(j, i)));
        }
    }
    if (defect > 1e-10 * scale) {
        throw ConfigError(
            "operator_spectrum: operator is not self-adjoint (drift or asymmetric coupling)");
    }

    if (cs.components == 1) {
        std::vector<double> diag(n), sub(n > 1 ? n - 1 : 0);
        for (int i = 0; i < n; ++i) diag[i] = -A.get(i, i);
        for (int i = 0; i + 1 < n; ++i) sub[i] = -A.get(i + 1, i);
        return tridiagonal_eigen(std::move(diag), std::move(sub));
    }
    std::vector<double> dense(static_cast<size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) {
        const int jlo = std::max(0, i - A.lower_bandwidth());
        const int jhi = std::min(n - 1, i + A.upper_bandwidth());
        for (int j = jlo; j <= jhi; ++j) dense[static_cast<size_t>(i) * n + j] = -A.get(i, j);
    }
    return jacobi_eigen(std::move(dense), n);
}

/// Modes an amplification cap of 1/delta lets through: e^{mu T} <= 1/delta.
inline int truncation_retained_count(const EigenDecomposition& spectrum, double T, double delta) {
    if (delta <= 0.0) return static_cast<int>(spectrum.values.size());
    const double cap = std::log(1.0 / delta);
    int count = 0;
    for (double mu : spectrum.values) {
        if (mu * T <= cap) ++count;
    }
    return count;
}

/// Spectral-filter backward reconstruction of the initial state from the
/// terminal snapshot, for the self-adjoint, time-independent, Dirichlet
/// linear case where the eigen-expansion of the semigroup is exact.
///
///   Tikhonov:   mode gain e^{mu T} / (1 + gamma e^{mu T}), gamma = delta
///   Truncation: exact gain e^{mu T} for modes with e^{mu T} <= 1/delta,
///               zero beyond the cap
///
/// Modes the data does not carry contribute nothing. With delta = 0 the gain
/// e^{mu T} of the top grid modes overflows any double, so "not carried"
/// must include projections at round-off level (containment 1e-11 relative);
/// data with genuine high-mode content under an unclipped filter still
/// amplifies to infinity, which is what asking for the exact inverse means.
inline GridFunction reconstruct(const GridFunction& terminal, const CoefficientSet& cs,
                                const Grid& g, BoundaryKind bc, const ReconstructOptions& opts) {
    opts.check();
    if (bc != BoundaryKind::Robin && bc != BoundaryKind::Dirichlet) {
        throw ConfigError("reconstruct: unknown boundary kind");
    }
    if (bc == BoundaryKind::Robin) {
        throw ConfigError("reconstruct: unsupported configuration (Robin boundary)");
    }
    const EigenDecomposition spectrum = operator_spectrum(cs, g);
    const int n = static_cast<int>(spectrum.values.size());
    const double T = g.horizon;
    const double delta = opts.noise_level;

    // Interior data vector in the node-major unknown ordering.
    const int N = cs.components;
    std::vector<double> data(n, 0.0);
    for (int j = 1; j <= g.nx; ++j) {
        for (int c = 0; c < N; ++c) data[static_cast<size_t>(j - 1) * N + c] = terminal.at(j, c);
    }

    std::vector<double> recovered(n, 0.0);
    const double cap = delta > 0.0 ? std::log(1.0 / delta) : std::numeric_limits<double>::infinity();
    double data_norm = 0.0;
    for (double v : data) data_norm += v * v;
    const double carried = 1e-11 * std::sqrt(data_norm);
    for (int k = 0; k < n; ++k) {
        double proj = 0.0;
        for (int i = 0; i < n; ++i) proj += spectrum.vectors[k][i] * data[i];
        if (delta == 0.0 ? std::fabs(proj) <= carried : proj == 0.0) continue;
        const double muT = spectrum.values[k] * T;
        double gain = 0.0;
        if (opts.filter == FilterKind::Tikhonov) {
            gain = delta > 0.0 ? 1.0 / (std::exp(-muT) + delta) : std::exp(muT);
        } else {
            gain = muT <= cap ? std::exp(muT) : 0.0;
        }
        const double amp = proj * gain;
        if (amp == 0.0) continue;
        for (int i = 0; i < n; ++i) recovered[i] += amp * spectrum.vectors[k][i];
    }

    GridFunction out(g.nodes(), N);
    for (int j = 1; j <= g.nx; ++j) {
        for (int c = 0; c < N; ++c) out.at(j, c) = recovered[static_cast<size_t>(j - 1) * N + c];
    }
    return out;
}

struct TrendRecord {
    double delta = 0.0;
    double error = 0.0;  // L2 distance to the true initial state
};

struct TrendResult {
    std::vector<TrendRecord> records;
    double slope = 0.0;  // log(error) against log log(1/delta)
};

/// The standard two-mode noise study: forward-solve sin(pi x / X) to T, add
/// delta * sin(k2 pi x / X) to the terminal snapshot, reconstruct, and fit
/// the log-error against log log(1/delta). The noise mode k2 = 3 sits where
/// the filter transition crosses the swept decades, which is what makes the
/// fitted slope informative.
inline TrendResult reconstruct_trend(const CoefficientSet& cs, const Grid& g,
                                     const ReconstructOptions& base,
                                     const std::vector<double>& delta_list, int noise_mode = 3,
                                     const SolveOptions& solve = {}) {
    if (delta_list.size() < 2) throw ConfigError("reconstruct_trend: need at least two deltas");
    const double w = 3.14159265358979323846 / g.length;
    const GridFunction u0 = sample(g, cs.components, [&](double x, int) { return std::sin(w * x); });
    const BoundaryCondition bc{BoundaryKind::Dirichlet};
    const Trajectory traj = solve_forward(cs, bc, Semilinearity{}, u0, g, solve);
    const GridFunction& terminal = traj.slices[g.nt];

    TrendResult out;
    std::vector<double> lx, ly;
    for (double delta : delta_list) {
        GridFunction noisy = terminal;
        for (int j = 0; j < g.nodes(); ++j) {
            const double bump = delta * std::sin(noise_mode * w * g.x(j));
            for (int c = 0; c < cs.components; ++c) noisy.at(j, c) += bump;
        }
        ReconstructOptions opts = base;
        opts.noise_level = delta;
        const GridFunction estimate = reconstruct(noisy, cs, g, BoundaryKind::Dirichlet, opts);
        TrendRecord rec;
        rec.delta = delta;
        rec.error = l2_norm(estimate - u0, g);
        out.records.push_back(rec);
        if (rec.error > 0.0 && delta > 0.0 && delta < 1.0) {
            lx.push_back(std::log(std::log(1.0 / delta)));
            ly.push_back(std::log(rec.error));
        }
    }
    if (lx.size() >= 2) out.slope = fit_slope(lx, ly);
    return out;
}

}  // namespace carlab
