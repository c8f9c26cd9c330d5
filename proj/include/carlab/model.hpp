#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "carlab/grid.hpp"
#include "carlab/util.hpp"

namespace carlab {

/// Coefficient fields of the differential operator: a second-order diffusion
/// family a(i,j,k,l), a drift family b(i,k,l), a zero-order coupling c(k,l)
/// and the Robin boundary coefficient p. All are callbacks over space-time;
/// spatial position is passed as (x, y) with y ignored in one dimension.
///
/// The solver supports dim == 1; dim == 2 coefficient sets can still be
/// constructed and validated.
struct CoefficientSet {
    int components = 1;  // N
    int dim = 1;         // n

    std::function<double(int i, int j, int k, int l, double x, double y, double t)> diffusion;
    std::function<double(int i, int k, int l, double x, double y, double t)> drift;  // may be null
    std::function<double(int k, int l, double x, double y, double t)> reaction;      // may be null
    std::function<double(double x, double y, double t)> robin_p;                     // may be null

    double sigma = 1.0;           // declared strong-ellipticity constant
    bool time_independent = false;

    double a(int i, int j, int k, int l, double x, double t) const {
        return diffusion(i, j, k, l, x, 0.0, t);
    }
    double b(int i, int k, int l, double x, double t) const {
        return drift ? drift(i, k, l, x, 0.0, t) : 0.0;
    }
    double c(int k, int l, double x, double t) const {
        return reaction ? reaction(k, l, x, 0.0, t) : 0.0;
    }
    double p(double x, double t) const {
        if (!robin_p) throw ConfigError("Robin boundary requested but coefficient p is unset");
        return robin_p(x, 0.0, t);
    }
    bool has_drift() const { return static_cast<bool>(drift); }
    bool has_reaction() const { return static_cast<bool>(reaction); }
};

struct BoundaryCondition {
    BoundaryKind kind = BoundaryKind::Dirichlet;
};

/// Semilinear source term. `eval` fills f_1..f_N from the state vector and
/// its spatial gradient at a point; an empty eval means f == 0. `lipschitz`
/// and `beta` are the declared constants of the local Lipschitz bound
/// ||f(u)-f(v)||_L2 <= L ||u-v||_{H^beta} on the working set.
struct Semilinearity {
    std::function<void(double x, double t, std::span<const double> u,
                       std::span<const double> du, std::span<double> out)> eval;
    double lipschitz = 0.0;
    double beta = 0.0;

    bool is_zero() const { return !eval; }
};

struct Problem {
    std::string name;
    CoefficientSet coeffs;
    BoundaryCondition bc;
    Semilinearity f;
};

/// Result of the numerical assumption check. `passed` requires the sampled
/// relative symmetry defect to stay below 1e-12 and the sampled ellipticity
/// margin min(quadform/|xi|^2 - sigma) to stay nonnegative.
struct ValidationReport {
    double max_symmetry_defect = 0.0;     // relative
    double min_ellipticity_margin = 0.0;  // quadform/|xi|^2 - sigma, worst case
    int samples = 0;
    bool passed = false;
    std::string detail;  // diagnostics for the offending sample, if any
};

inline constexpr double kSymmetryTolerance = 1e-12;

/// Samples the symmetry identities a(i,j,k,l) = a(j,i,k,l) = a(i,j,l,k) and
/// the strong-ellipticity quadratic form at seeded random space-time points.
/// The ellipticity probe uses canonical basis directions plus random xi; the
/// continuous condition is universal, so this is a falsification test, not a
/// proof.
inline ValidationReport validate(const CoefficientSet& cs, int samples, std::uint64_t seed = 12345,
                                 double domain_length = 3.14159265358979323846,
                                 double horizon = 1.0) {
    if (samples < 1) throw ConfigError("validate: samples must be positive");
    if (!cs.diffusion) throw ConfigError("validate: diffusion coefficients unset");

    ValidationReport rep;
    rep.samples = samples;
    rep.min_ellipticity_margin = std::numeric_limits<double>::infinity();
    Rng rng(seed);

    const int N = cs.components;
    const int n = cs.dim;
    const int dirs = N * n;

    std::vector<double> xi(dirs);
    double worst_defect = 0.0;
    double worst_margin = std::numeric_limits<double>::infinity();
    std::ostringstream detail;

    for (int s = 0; s < samples; ++s) {
        const double x = rng.uniform(0.0, domain_length);
        const double y = (n > 1) ? rng.uniform(0.0, domain_length) : 0.0;
        const double t = rng.uniform(0.0, horizon);

        try {
            // Symmetry defect, relative to the local coefficient scale.
            double scale = 0.0;
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    for (int k = 0; k < N; ++k)
                        for (int l = 0; l < N; ++l)
                            scale = std::max(scale, std::fabs(cs.diffusion(i, j, k, l, x, y, t)));
            scale = std::max(scale, 1e-30);
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j < n; ++j) {
                    for (int k = 0; k < N; ++k) {
                        for (int l = 0; l < N; ++l) {
                            const double v = cs.diffusion(i, j, k, l, x, y, t);
                            const double dji = std::fabs(v - cs.diffusion(j, i, k, l, x, y, t));
                            const double dlk = std::fabs(v - cs.diffusion(i, j, l, k, x, y, t));
                            const double defect = std::max(dji, dlk) / scale;
                            if (defect > worst_defect) {
                                worst_defect = defect;
                                if (defect > kSymmetryTolerance) {
                                    detail.str("");
                                    detail << "symmetry defect " << defect << " at (i,j,k,l)=(" << i
                                           << "," << j << "," << k << "," << l << "), x=" << x
                                           << ", t=" << t;
                                }
                            }
                        }
                    }
                }
            }

            // Ellipticity margin over canonical directions and random xi.
            auto margin_for = [&](const std::vector<double>& v) {
                double quad = 0.0;
                double nrm2 = 0.0;
                for (int k = 0; k < N; ++k) {
                    for (int i = 0; i < n; ++i) {
                        const double vik = v[static_cast<size_t>(k) * n + i];
                        nrm2 += vik * vik;
                        for (int l = 0; l < N; ++l) {
                            for (int j = 0; j < n; ++j) {
                                quad += cs.diffusion(i, j, k, l, x, y, t) * vik *
                                        v[static_cast<size_t>(l) * n + j];
                            }
                        }
                    }
                }
                return nrm2 > 0.0 ? quad / nrm2 - cs.sigma : std::numeric_limits<double>::infinity();
            };

            for (int d = 0; d < dirs; ++d) {
                std::fill(xi.begin(), xi.end(), 0.0);
                xi[d] = 1.0;
                worst_margin = std::min(worst_margin, margin_for(xi));
            }
            for (int rep_xi = 0; rep_xi < 4; ++rep_xi) {
                for (double& v : xi) v = rng.normal();
                const double m = margin_for(xi);
                if (m < worst_margin) {
                    worst_margin = m;
                    if (m < 0.0) {
                        detail.str("");
                        detail << "ellipticity margin " << m << " at x=" << x << ", t=" << t;
                    }
                }
            }
        } catch (const std::exception& e) {
            std::ostringstream msg;
            msg << "coefficient evaluation failed at x=" << x << ", t=" << t << ": " << e.what();
            throw NumericalError(msg.str());
        }
    }

    rep.max_symmetry_defect = worst_defect;
    rep.min_ellipticity_margin = worst_margin;
    rep.passed = worst_defect <= kSymmetryTolerance && worst_margin >= 0.0;
    rep.detail = detail.str();
    return rep;
}

/// Named model presets.
///   heat1d        scalar heat equation on (0,pi), Dirichlet, f = 0
///   coupled2      two components, constant symmetric diffusion [[2,1],[1,2]]
///   paper_example scalar heat diffusion with f = e^{-t} sin(du/dx), L = 1
inline Problem preset(const std::string& name) {
    Problem prob;
    prob.name = name;
    prob.bc.kind = BoundaryKind::Dirichlet;
    if (name == "heat1d" || name == "paper_example") {
        prob.coeffs.components = 1;
        prob.coeffs.dim = 1;
        prob.coeffs.diffusion = [](int, int, int, int, double, double, double) { return 1.0; };
        prob.coeffs.sigma = 1.0;
        prob.coeffs.time_independent = true;
        if (name == "paper_example") {
            prob.f.eval = [](double, double t, std::span<const double>,
                             std::span<const double> du, std::span<double> out) {
                const double damp = std::exp(-t);
                for (size_t l = 0; l < out.size(); ++l) out[l] = damp * std::sin(du[l]);
            };
            prob.f.lipschitz = 1.0;
            prob.f.beta = 1.0;
        }
    } else if (name == "coupled2") {
        prob.coeffs.components = 2;
        prob.coeffs.dim = 1;
        prob.coeffs.diffusion = [](int, int, int k, int l, double, double, double) {
            return k == l ? 2.0 : 1.0;
        };
        prob.coeffs.sigma = 1.0;
        prob.coeffs.time_independent = true;
    } else {
        throw ConfigError("unknown preset '" + name + "' (expected heat1d, coupled2, paper_example)");
    }
    return prob;
}

}  // namespace carlab
