#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "carlab/grid.hpp"
#include "carlab/util.hpp"

namespace carlab {

enum class NormKind { L2, H1, Hbeta };

/// Trapezoidal quadrature of |u|^2 over the domain, all components.
inline double l2_norm_sq(const GridFunction& u, const Grid& g) {
    const double h = g.h();
    double s = 0.0;
    for (int c = 0; c < u.components(); ++c) {
        s += 0.5 * u.at(0, c) * u.at(0, c);
        for (int j = 1; j <= g.nx; ++j) s += u.at(j, c) * u.at(j, c);
        s += 0.5 * u.at(g.nx + 1, c) * u.at(g.nx + 1, c);
    }
    return h * s;
}

/// Gradient seminorm squared from cell-midpoint first differences. This is
/// the Dirichlet form of the standard discrete Laplacian, so for fields that
/// vanish on the boundary it matches the spectral H^1 norm to round-off.
inline double gradient_seminorm_sq(const GridFunction& u, const Grid& g) {
    const double h = g.h();
    double s = 0.0;
    for (int c = 0; c < u.components(); ++c) {
        for (int j = 0; j <= g.nx; ++j) {
            const double d = (u.at(j + 1, c) - u.at(j, c)) / h;
            s += d * d;
        }
    }
    return h * s;
}

inline double l2_norm(const GridFunction& u, const Grid& g) { return std::sqrt(l2_norm_sq(u, g)); }

inline double h1_norm_sq(const GridFunction& u, const Grid& g) {
    return l2_norm_sq(u, g) + gradient_seminorm_sq(u, g);
}

inline double h1_norm(const GridFunction& u, const Grid& g) { return std::sqrt(h1_norm_sq(u, g)); }

/// Eigenvalues of the negative Dirichlet Laplacian on the grid.
inline double dirichlet_laplacian_eigenvalue(const Grid& g, int k) {
    const double h = g.h();
    const double s = std::sin(0.5 * k * 3.14159265358979323846 / (g.nx + 1));
    return 4.0 / (h * h) * s * s;
}

/// Interpolation norm ||u||_{H^beta} = (sum_k (1+mu_k)^beta |c_k|^2)^{1/2}
/// through the discrete sine basis. The grid's sine modes diagonalize the
/// same difference operator whose Dirichlet form is gradient_seminorm_sq, so
/// beta = 0 and beta = 1 reproduce the L2 and H1 norms on fields that vanish
/// at the boundary.
inline double hbeta_norm(const GridFunction& u, const Grid& g, double beta) {
    if (!(beta >= 0.0 && beta <= 1.0)) {
        throw std::domain_error("hbeta_norm: beta must lie in [0, 1]");
    }
    const int m = g.nx;
    const double pi = 3.14159265358979323846;
    const double energy_scale = g.h() * (m + 1) / 2.0;  // ||sine mode||^2 in h-weighted dot
    double total = 0.0;
    for (int c = 0; c < u.components(); ++c) {
        for (int k = 1; k <= m; ++k) {
            double proj = 0.0;
            for (int j = 1; j <= m; ++j) proj += u.at(j, c) * std::sin(pi * k * j / (m + 1));
            const double coeff = 2.0 / (m + 1) * proj;
            const double mu = dirichlet_laplacian_eigenvalue(g, k);
            total += std::pow(1.0 + mu, beta) * energy_scale * coeff * coeff;
        }
    }
    return std::sqrt(total);
}

inline double norm(const GridFunction& u, const Grid& g, NormKind kind, double beta = 0.0) {
    switch (kind) {
        case NormKind::L2: return l2_norm(u, g);
        case NormKind::H1: return h1_norm(u, g);
        case NormKind::Hbeta: return hbeta_norm(u, g, beta);
    }
    throw ConfigError("norm: unknown kind");
}

/// Squared boundary values (the 1-D boundary integral is a two-point sum).
inline double boundary_norm_sq(const GridFunction& u) {
    double s = 0.0;
    for (int c = 0; c < u.components(); ++c) {
        s += u.at(0, c) * u.at(0, c);
        s += u.at(u.nodes() - 1, c) * u.at(u.nodes() - 1, c);
    }
    return s;
}

/// Module constant of the trace estimate, frozen from a one-time
/// maximization of eps*(lhs - eps*|grad|^2)/|u|^2 over the probe family of
/// calibrate_trace_constant (observed supremum 0.92 across grids and seeds;
/// the averaging argument for arbitrary fields on (0,pi) needs 4 + 2eps/X).
/// Kept above both.
inline constexpr double kTraceConstant = 5.0;

struct TraceCheck {
    double lhs = 0.0;  // boundary norm squared
    double rhs = 0.0;  // eps |grad u|^2 + (K/eps) |u|^2
    bool holds = false;
};

/// Both sides of the boundary trace estimate with C9(eps) = K/eps.
inline TraceCheck trace_check(const GridFunction& u, const Grid& g, double eps) {
    if (!(eps > 0.0 && eps < 1.0)) throw std::domain_error("trace_check: eps must lie in (0, 1)");
    TraceCheck out;
    out.lhs = boundary_norm_sq(u);
    out.rhs = eps * gradient_seminorm_sq(u, g) + kTraceConstant / eps * l2_norm_sq(u, g);
    out.holds = out.lhs <= out.rhs;
    return out;
}

/// One-time calibration instrument for kTraceConstant: the supremum of
/// eps*(lhs - eps*|grad|^2)/|u|^2 over seeded smooth probes and an eps grid.
inline double calibrate_trace_constant(const Grid& g, int probes, std::uint64_t seed) {
    Rng rng(seed);
    double sup = 0.0;
    const double eps_grid[] = {0.1, 0.25, 0.5, 0.75, 0.9};
    for (int i = 0; i < probes; ++i) {
        const GridFunction u = random_smooth_field(g, 1, rng);
        const double l2 = l2_norm_sq(u, g);
        if (l2 <= 0.0) continue;
        const double grad = gradient_seminorm_sq(u, g);
        const double lhs = boundary_norm_sq(u);
        for (double eps : eps_grid) {
            sup = std::max(sup, eps * (lhs - eps * grad) / l2);
        }
    }
    return sup;
}

}  // namespace carlab
