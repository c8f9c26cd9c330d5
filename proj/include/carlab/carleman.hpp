#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "carlab/grid.hpp"
#include "carlab/model.hpp"
#include "carlab/norms.hpp"
#include "carlab/operators.hpp"
#include "carlab/util.hpp"

namespace carlab {

/// The weight pair (s, lambda) with phi(t) = e^{lambda t} >= 1 and
/// mu(t) = phi(t) - 1 >= 0 on t >= 0.
struct CarlemanWeight {
    double s = 1.0;
    double lambda = 1.0;

    double phi(double t) const { return std::exp(lambda * t); }
    double mu(double t) const { return phi(t) - 1.0; }

    CarlemanWeight(double s_, double lambda_) : s(s_), lambda(lambda_) {
        if (!(s > 0.0) || !(lambda > 0.0)) {
            throw ConfigError("CarlemanWeight: s > 0 and lambda > 0 required");
        }
    }
};

inline constexpr double kMaxExponent = 709.0;  // ~log(DBL_MAX)

struct WeightEval {
    double phi = 1.0;
    double mu = 0.0;
    double factor = 1.0;      // e^{2 s phi(t)}, +inf once past double range
    double log_factor = 0.0;  // 2 s phi(t), always finite
    bool scaled = false;      // factor not representable; use log_factor
};

/// Pointwise weight evaluation. When 2 s phi(t) exceeds the representable
/// range the call switches to scaled mode: `factor` saturates and every
/// integral downstream works relative to log_factor instead.
inline WeightEval weight(double t, const CarlemanWeight& w) {
    WeightEval out;
    out.phi = w.phi(t);
    out.mu = out.phi - 1.0;
    out.log_factor = 2.0 * w.s * out.phi;
    out.scaled = out.log_factor > kMaxExponent;
    out.factor = out.scaled ? std::numeric_limits<double>::infinity() : std::exp(out.log_factor);
    return out;
}

/// Per-slice spatial integrals of the trajectory, the (s, lambda)-free part
/// of every Carleman integrand. residual_sq is filled on demand only; it is
/// the expensive piece (a full operator sweep).
struct SliceIntegrals {
    std::vector<double> state_sq;     // int |z|^2 dx
    std::vector<double> grad_sq;      // int |grad z|^2 dx
    std::vector<double> dt_sq;        // int |dz/dt|^2 dx
    std::vector<double> residual_sq;  // int |P z|^2 dx, empty unless requested
};

inline SliceIntegrals precompute_slices(const Trajectory& z, const CoefficientSet* cs_for_residual) {
    SliceIntegrals si;
    const int nt = z.grid.nt;
    si.state_sq.resize(nt + 1);
    si.grad_sq.resize(nt + 1);
    si.dt_sq.resize(nt + 1);
    for (int m = 0; m <= nt; ++m) {
        si.state_sq[m] = l2_norm_sq(z.slices[m], z.grid);
        si.grad_sq[m] = gradient_seminorm_sq(z.slices[m], z.grid);
        si.dt_sq[m] = l2_norm_sq(time_derivative_slice(z, m), z.grid);
    }
    if (cs_for_residual != nullptr) {
        const std::vector<GridFunction> res = apply_parabolic(z, *cs_for_residual, true);
        si.residual_sq.resize(nt + 1);
        for (int m = 0; m <= nt; ++m) si.residual_sq[m] = l2_norm_sq(res[m], z.grid);
    }
    return si;
}

/// Left side of the Carleman estimate, split into its three integrands. All
/// values are mantissas relative to e^{log_scale} with log_scale = 2s phi(T),
/// so the slice weights e^{2s(phi(t)-phi(T))} never overflow.
struct LhsBreakdown {
    double dt_part = 0.0;    // int (1/(s phi)) |dz/dt|^2 e^{2s phi}
    double grad_part = 0.0;  // int lambda |grad z|^2 e^{2s phi}
    double zero_part = 0.0;  // int s lambda^2 phi |z|^2 e^{2s phi}
    double total = 0.0;      // exact sum of the three parts
    double log_scale = 0.0;
    bool weight_scaled = false;
};

namespace detail {

inline double time_weight(const Grid& g, int m) {
    return (m == 0 || m == g.nt) ? 0.5 * g.dt() : g.dt();
}

inline LhsBreakdown lhs_from_slices(const SliceIntegrals& si, const Grid& g,
                                    const CarlemanWeight& w) {
    LhsBreakdown out;
    const double phi_T = w.phi(g.horizon);
    out.log_scale = 2.0 * w.s * phi_T;
    out.weight_scaled = out.log_scale > kMaxExponent;
    for (int m = 0; m <= g.nt; ++m) {
        const double phi = w.phi(g.t(m));
        const double wm = detail::time_weight(g, m) * std::exp(2.0 * w.s * (phi - phi_T));
        out.dt_part += wm / (w.s * phi) * si.dt_sq[m];
        out.grad_part += wm * w.lambda * si.grad_sq[m];
        out.zero_part += wm * w.s * w.lambda * w.lambda * phi * si.state_sq[m];
    }
    out.total = out.dt_part + out.grad_part + out.zero_part;
    return out;
}

}  // namespace detail

inline LhsBreakdown lhs_car(const Trajectory& z, const CarlemanWeight& w) {
    return detail::lhs_from_slices(precompute_slices(z, nullptr), z.grid, w);
}

/// One cell of a Carleman verification: mantissas of both sides relative to
/// e^{log_scale} and their ratio c_star = lhs / rhs, the empirical constant
/// the estimate would need at this (s, lambda). c_star is 0 by convention
/// for an identically zero trajectory.
struct CarlemanBudget {
    double s = 0.0;
    double lambda = 0.0;
    double lhs = 0.0;
    double rhs_interior = 0.0;
    double rhs_terminal = 0.0;
    double rhs_initial = 0.0;
    double log_scale = 0.0;
    double c_star = 0.0;
    bool bc_warning = false;
    bool weight_scaled = false;
};

/// Flags trajectories that do not satisfy the boundary condition they claim.
/// Dirichlet: boundary values must vanish to round-off. Robin: the conormal
/// residual, measured with one-sided gradients, must be small against the
/// size of its terms (the solver satisfies it to O(h^2), a violator by O(1)).
inline bool boundary_violation(const Trajectory& z, const CoefficientSet& cs) {
    const int N = z.components();
    const int last = z.grid.nx + 1;
    const double h = z.grid.h();
    if (z.bc == BoundaryKind::Dirichlet) {
        double zmax = 1e-300;
        for (const auto& s : z.slices) {
            for (double v : s.data()) zmax = std::max(zmax, std::fabs(v));
        }
        return z.max_boundary_value() > 1e-10 * zmax;
    }
    double worst = 0.0;
    for (int m = 0; m <= z.grid.nt; ++m) {
        const double t = z.grid.t(m);
        const GridFunction& u = z.slices[m];
        for (int side = 0; side < 2; ++side) {
            const int j = side == 0 ? 0 : last;
            const double x = z.grid.x(j);
            const double p = cs.p(x, t);
            for (int l = 0; l < N; ++l) {
                double flux = 0.0;
                double scale = 1e-300;
                for (int k = 0; k < N; ++k) {
                    double du;
                    if (side == 0) {
                        du = (-3.0 * u.at(0, k) + 4.0 * u.at(1, k) - u.at(2, k)) / (2 * h);
                    } else {
                        du = (3.0 * u.at(last, k) - 4.0 * u.at(last - 1, k) +
                              u.at(last - 2, k)) / (2 * h);
                    }
                    const double nu = side == 0 ? -1.0 : 1.0;
                    const double term = cs.a(0, 0, k, l, x, t) * du * nu;
                    flux += term;
                    scale = std::max(scale, std::fabs(term));
                }
                const double resid = flux + p * u.at(j, l);
                scale = std::max(scale, std::fabs(p * u.at(j, l)));
                worst = std::max(worst, std::fabs(resid) / scale);
            }
        }
    }
    return worst > 0.05;
}

/// Right side of the Carleman estimate; the caller fills `lhs` and `c_star`
/// (see evaluate_budget).
inline CarlemanBudget rhs_car(const Trajectory& z, const CoefficientSet& cs,
                              const CarlemanWeight& w, const SliceIntegrals* pre = nullptr) {
    SliceIntegrals local;
    if (pre == nullptr || pre->residual_sq.empty()) {
        local = precompute_slices(z, &cs);
        pre = &local;
    }
    const Grid& g = z.grid;
    CarlemanBudget b;
    b.s = w.s;
    b.lambda = w.lambda;
    const double phi_T = w.phi(g.horizon);
    b.log_scale = 2.0 * w.s * phi_T;
    b.weight_scaled = b.log_scale > kMaxExponent;
    for (int m = 0; m <= g.nt; ++m) {
        const double phi = w.phi(g.t(m));
        const double wm = detail::time_weight(g, m) * std::exp(2.0 * w.s * (phi - phi_T));
        b.rhs_interior += wm * pre->residual_sq[m];
    }
    b.rhs_terminal = w.s * w.lambda * phi_T * pre->state_sq[g.nt] + pre->grad_sq[g.nt];
    b.rhs_initial = (w.s * w.lambda * pre->state_sq[0] + pre->grad_sq[0]) *
                    std::exp(2.0 * w.s * (1.0 - phi_T));
    b.bc_warning = boundary_violation(z, cs);
    return b;
}

inline CarlemanBudget evaluate_budget(const Trajectory& z, const CoefficientSet& cs,
                                      const CarlemanWeight& w, const SliceIntegrals* pre = nullptr) {
    SliceIntegrals local;
    if (pre == nullptr) {
        local = precompute_slices(z, &cs);
        pre = &local;
    }
    CarlemanBudget b = rhs_car(z, cs, w, pre);
    b.lhs = detail::lhs_from_slices(*pre, z.grid, w).total;
    const double rhs = b.rhs_interior + b.rhs_terminal + b.rhs_initial;
    b.c_star = (b.lhs == 0.0 && rhs == 0.0) ? 0.0 : b.lhs / rhs;
    return b;
}

struct SweepResult {
    std::vector<CarlemanBudget> cells;  // s-major: all lambdas for s_list[0], ...
    double sup_c_star = 0.0;
    double argmax_s = 0.0;
    double argmax_lambda = 0.0;
    /// Per lambda: true when c_star is nonincreasing along s_list.
    std::vector<bool> nonincreasing_in_s;
};

/// Evaluates the budget over an (s, lambda) grid. The supremum of c_star and
/// its argmax cell are the sweep's estimate of the minimal admissible
/// constant and of where the estimate is tightest.
inline SweepResult sweep_constant(const Trajectory& z, const CoefficientSet& cs,
                                  const std::vector<double>& s_list,
                                  const std::vector<double>& lambda_list) {
    if (s_list.empty() || lambda_list.empty()) {
        throw ConfigError("sweep_constant: nonempty parameter lists required");
    }
    const SliceIntegrals pre = precompute_slices(z, &cs);
    SweepResult out;
    for (double s : s_list) {
        for (double lambda : lambda_list) {
            const CarlemanWeight w(s, lambda);
            CarlemanBudget b = evaluate_budget(z, cs, w, &pre);
            if (b.c_star >= out.sup_c_star) {
                out.sup_c_star = b.c_star;
                out.argmax_s = s;
                out.argmax_lambda = lambda;
            }
            out.cells.push_back(b);
        }
    }
    const size_t nl = lambda_list.size();
    for (size_t il = 0; il < nl; ++il) {
        bool mono = true;
        for (size_t is = 1; is < s_list.size(); ++is) {
            if (out.cells[is * nl + il].c_star > out.cells[(is - 1) * nl + il].c_star * (1 + 1e-12)) {
                mono = false;
                break;
            }
        }
        out.nonincreasing_in_s.push_back(mono);
    }
    return out;
}

struct J1Check {
    double direct = 0.0;      // -2 s lambda int phi (dv/dt, v), v = e^{s phi} z
    double parts_form = 0.0;  // the integrated-by-parts expression
    double defect = 0.0;      // relative difference
    double log_scale = 0.0;   // both values are mantissas at e^{log_scale}
};

/// Discrete self-check of the time integration-by-parts identity behind the
/// J1 term. Both evaluations run on v scaled by e^{-s phi(T)}; the identity
/// is exact in the continuum, so the reported defect is pure time
/// discretization error and shrinks at second order in dt.
inline J1Check j1_identity_check(const Trajectory& z, const CarlemanWeight& w) {
    const Grid& g = z.grid;
    const double phi_T = w.phi(g.horizon);

    Trajectory v_scaled;
    v_scaled.grid = g;
    v_scaled.bc = z.bc;
    v_scaled.slices.reserve(g.nt + 1);
    for (int m = 0; m <= g.nt; ++m) {
        GridFunction v = z.slices[m];
        v *= std::exp(w.s * (w.phi(g.t(m)) - phi_T));
        v_scaled.slices.push_back(std::move(v));
    }

    J1Check out;
    out.log_scale = 2.0 * w.s * phi_T;
    for (int m = 0; m <= g.nt; ++m) {
        const double phi = w.phi(g.t(m));
        const double tw = detail::time_weight(g, m);
        const GridFunction dv = time_derivative_slice(v_scaled, m);
        const GridFunction& v = v_scaled.slices[m];
        // int (dv, v) dx by the same trapezoid rule as the norms
        double inner = 0.0;
        const double h = g.h();
        for (int c = 0; c < v.components(); ++c) {
            inner += 0.5 * dv.at(0, c) * v.at(0, c);
            for (int j = 1; j <= g.nx; ++j) inner += dv.at(j, c) * v.at(j, c);
            inner += 0.5 * dv.at(g.nx + 1, c) * v.at(g.nx + 1, c);
        }
        inner *= h;
        out.direct += -2.0 * w.s * w.lambda * tw * phi * inner;
        out.parts_form += w.s * w.lambda * w.lambda * tw * phi * l2_norm_sq(v, g);
    }
    out.parts_form += -w.s * w.lambda *
                      (w.phi(g.horizon) * l2_norm_sq(v_scaled.slices[g.nt], g) -
                       1.0 * l2_norm_sq(v_scaled.slices[0], g) * 1.0);
    const double denom = std::max({std::fabs(out.parts_form), std::fabs(out.direct), 1e-300});
    out.defect = std::fabs(out.direct - out.parts_form) / denom;
    return out;
}

}  // namespace carlab
