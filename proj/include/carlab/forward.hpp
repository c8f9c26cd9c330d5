#pragma once

#include <cmath>
#include <optional>
#include <sstream>
#include <vector>

#include "carlab/grid.hpp"
#include "carlab/model.hpp"
#include "carlab/norms.hpp"
#include "carlab/operators.hpp"
#include "carlab/util.hpp"

namespace carlab {

enum class Scheme { BackwardEuler, CrankNicolson };

struct SolveOptions {
    Scheme scheme = Scheme::CrankNicolson;
    int picard_max = 50;
    double picard_tol = 1e-12;
    bool freeze_nonlinearity = false;  // explicit treatment of f

    void check() const {
        if (picard_max < 1 || !(picard_tol > 0.0)) {
            throw ConfigError("SolveOptions: picard_max >= 1 and picard_tol > 0 required");
        }
    }
};

namespace detail {

/// Samples the semilinearity on the nodes the scheme evolves. The gradient
/// entering f is centered at interior nodes and one-sided second-order at
/// Robin boundary nodes; Dirichlet boundary rows are not evolved and stay 0.
inline GridFunction eval_semilinearity(const Semilinearity& f, const GridFunction& u,
                                       const Grid& g, BoundaryKind bc, double t) {
    const int N = u.components();
    GridFunction out(u.nodes(), N);
    if (f.is_zero()) return out;
    const double h = g.h();
    std::vector<double> uval(N), du(N), fval(N);
    const int last = g.nx + 1;
    const int j0 = bc == BoundaryKind::Dirichlet ? 1 : 0;
    const int j1 = bc == BoundaryKind::Dirichlet ? g.nx : last;
    for (int j = j0; j <= j1; ++j) {
        for (int c = 0; c < N; ++c) {
            uval[c] = u.at(j, c);
            if (j == 0) {
                du[c] = (-3.0 * u.at(0, c) + 4.0 * u.at(1, c) - u.at(2, c)) / (2 * h);
            } else if (j == last) {
                du[c] = (3.0 * u.at(last, c) - 4.0 * u.at(last - 1, c) + u.at(last - 2, c)) / (2 * h);
            } else {
                du[c] = (u.at(j + 1, c) - u.at(j - 1, c)) / (2 * h);
            }
        }
        f.eval(g.x(j), t, uval, du, fval);
        for (int c = 0; c < N; ++c) out.at(j, c) = fval[c];
    }
    return out;
}

inline double diff_norm(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

inline double vec_norm(const std::vector<double>& a) {
    double s = 0.0;
    for (double v : a) s += v * v;
    return std::sqrt(s);
}

}  // namespace detail

/// Implicit time stepping for the semilinear system: backward Euler or
/// Crank-Nicolson in the linear part, Picard iteration on the new state for
/// the semilinear term (skipped when f is frozen to the old state). With
/// time-independent coefficients the step matrix is factored once.
inline Trajectory solve_forward(const CoefficientSet& cs, const BoundaryCondition& bc,
                                const Semilinearity& f, const GridFunction& u0, const Grid& g,
                                const SolveOptions& opts = {}) {
    opts.check();
    const double dt = g.dt();
    const bool implicit_f = !f.is_zero() && !opts.freeze_nonlinearity;
    if (implicit_f && dt * f.lipschitz > 0.5) {
        std::ostringstream msg;
        msg << "solve_forward: dt*L = " << dt * f.lipschitz
            << " exceeds 0.5; refine the time grid for a contractive Picard step";
        throw ConfigError(msg.str());
    }

    const bool cn = opts.scheme == Scheme::CrankNicolson;
    const double gamma = cn ? 0.5 * dt : dt;

    Trajectory traj;
    traj.grid = g;
    traj.bc = bc.kind;
    traj.slices.reserve(g.nt + 1);
    traj.slices.push_back(u0);

    std::optional<DiscreteOperator> cached_op;
    std::optional<BandedMatrix> cached_step;
    if (cs.time_independent) {
        cached_op.emplace(cs, 0.0, g, bc.kind, OperatorParts::Full);
        cached_step = cached_op->stepping_matrix(gamma);
        cached_step->factor();
    }

    for (int m = 0; m < g.nt; ++m) {
        const double t_old = g.t(m);
        const double t_new = g.t(m + 1);
        const GridFunction& u_old = traj.slices.back();

        std::optional<DiscreteOperator> op_old_storage;
        std::optional<DiscreteOperator> op_new_storage;
        const DiscreteOperator* op_old = nullptr;
        if (cs.time_independent) {
            op_old = &*cached_op;
        } else if (cn) {
            op_old_storage.emplace(cs, t_old, g, bc.kind, OperatorParts::Full);
            op_old = &*op_old_storage;
        }
        BandedMatrix* step = nullptr;
        BandedMatrix local_step;
        if (cs.time_independent) {
            step = &*cached_step;
        } else {
            op_new_storage.emplace(cs, t_new, g, bc.kind, OperatorParts::Full);
            local_step = op_new_storage->stepping_matrix(gamma);
            local_step.factor();
            step = &local_step;
        }
        const DiscreteOperator& restrictor =
            cs.time_independent ? *cached_op : *op_new_storage;

        // Base right-hand side without the new-state f contribution.
        std::vector<double> base = restrictor.restrict_to_unknowns(u_old);
        if (cn) {
            GridFunction au = op_old->apply(u_old);
            const std::vector<double> auv = restrictor.restrict_to_unknowns(au);
            for (size_t i = 0; i < base.size(); ++i) base[i] += 0.5 * dt * auv[i];
        }
        GridFunction f_old(u_old.nodes(), u_old.components());
        if (!f.is_zero()) f_old = detail::eval_semilinearity(f, u_old, g, bc.kind, t_old);
        if (!f.is_zero() && (opts.freeze_nonlinearity || cn)) {
            const double w = opts.freeze_nonlinearity ? dt : 0.5 * dt;
            const std::vector<double> fv = restrictor.restrict_to_unknowns(f_old);
            for (size_t i = 0; i < base.size(); ++i) base[i] += w * fv[i];
        }

        std::vector<double> w_vec = restrictor.restrict_to_unknowns(u_old);
        GridFunction w_grid = u_old;
        if (implicit_f) {
            const double fw = cn ? 0.5 * dt : dt;
            bool converged = false;
            double last_update = 0.0;
            for (int it = 0; it < opts.picard_max; ++it) {
                GridFunction f_new = detail::eval_semilinearity(f, w_grid, g, bc.kind, t_new);
                std::vector<double> rhs = base;
                const std::vector<double> fv = restrictor.restrict_to_unknowns(f_new);
                for (size_t i = 0; i < rhs.size(); ++i) rhs[i] += fw * fv[i];
                step->solve(rhs);
                last_update = detail::diff_norm(rhs, w_vec);
                w_vec = std::move(rhs);
                w_grid = restrictor.extend_to_grid(w_vec);
                if (last_update <= opts.picard_tol * (detail::vec_norm(w_vec) + 1e-30)) {
                    converged = true;
                    break;
                }
            }
            if (!converged) {
                std::ostringstream msg;
                msg << "solve_forward: Picard iteration did not converge at step " << m + 1
                    << " (last update " << last_update << ")";
                throw NumericalError(msg.str());
            }
        } else {
            std::vector<double> rhs = base;
            step->solve(rhs);
            w_vec = std::move(rhs);
            w_grid = restrictor.extend_to_grid(w_vec);
        }

        if (!w_grid.finite()) {
            std::ostringstream msg;
            msg << "solve_forward: non-finite state at step " << m + 1;
            throw NumericalError(msg.str());
        }
        traj.slices.push_back(std::move(w_grid));
    }
    return traj;
}

/// Trajectories of u and its first `order` time derivatives for the linear
/// problem with time-independent coefficients: d/dt commutes with the
/// generator there, so d^j u/dt^j solves the same system from A^j u0. The
/// finite-difference cross-check of the result lives with the tests.
inline std::vector<Trajectory> time_derivative_trajectories(const CoefficientSet& cs,
                                                            const BoundaryCondition& bc,
                                                            const GridFunction& u0, const Grid& g,
                                                            const SolveOptions& opts = {},
                                                            int order = 2) {
    if (!cs.time_independent) {
        throw ConfigError(
            "time_derivative_trajectories: coefficients must be time-independent");
    }
    if (order < 0 || order > 2) {
        throw ConfigError("time_derivative_trajectories: order must be 0, 1, or 2");
    }
    const Semilinearity no_f{};
    DiscreteOperator op(cs, 0.0, g, bc.kind, OperatorParts::Full);
    std::vector<Trajectory> out;
    GridFunction init = u0;
    for (int j = 0; j <= order; ++j) {
        out.push_back(solve_forward(cs, bc, no_f, init, g, opts));
        if (j < order) init = op.apply(init);
    }
    return out;
}

/// Worst sampled ratio ||f(.,t,u) - f(.,t,v)||_L2 / ||u - v||_{H^beta} over
/// seeded random pairs of smooth Dirichlet fields, the measurable face of
/// the declared local Lipschitz bound.
inline double measure_lipschitz_ratio(const Problem& prob, const Grid& g, int pairs,
                                      std::uint64_t seed) {
    if (prob.f.is_zero()) return 0.0;
    Rng rng(seed);
    double worst = 0.0;
    for (int i = 0; i < pairs; ++i) {
        const GridFunction u = random_dirichlet_field(g, prob.coeffs.components, rng);
        const GridFunction v = random_dirichlet_field(g, prob.coeffs.components, rng);
        const double t = rng.uniform(0.0, g.horizon);
        const GridFunction fu = detail::eval_semilinearity(prob.f, u, g, prob.bc.kind, t);
        const GridFunction fv = detail::eval_semilinearity(prob.f, v, g, prob.bc.kind, t);
        const double denom = hbeta_norm(u - v, g, prob.f.beta);
        if (denom <= 0.0) continue;
        worst = std::max(worst, l2_norm(fu - fv, g) / denom);
    }
    return worst;
}

/// Initial data compatible with the boundary condition: sin(pi x / X) per
/// component for Dirichlet; for Robin with constant p > 0 the parabola
/// x(X-x) + rX/p (r the common diffusion row sum), whose conormal flux
/// cancels p u at both walls; 1 + cos(pi x / X) for p = 0.
inline GridFunction default_initial_data(const CoefficientSet& cs, BoundaryKind bc, const Grid& g) {
    const double pi = 3.14159265358979323846;
    const int N = cs.components;
    if (bc == BoundaryKind::Dirichlet) {
        return sample(g, N, [&](double x, int) { return std::sin(pi * x / g.length); });
    }
    const double p = cs.p(0.0, 0.0);
    if (p == 0.0) {
        return sample(g, N, [&](double x, int) { return 1.0 + std::cos(pi * x / g.length); });
    }
    double rowsum = 0.0;
    for (int k = 0; k < N; ++k) rowsum += cs.a(0, 0, k, 0, 0.0, 0.0);
    for (int l = 1; l < N; ++l) {
        double rs = 0.0;
        for (int k = 0; k < N; ++k) rs += cs.a(0, 0, k, l, 0.0, 0.0);
        if (std::fabs(rs - rowsum) > 1e-12 * std::fabs(rowsum)) {
            throw ConfigError(
                "default_initial_data: Robin default needs equal diffusion row sums");
        }
    }
    const double c = rowsum * g.length / p;
    return sample(g, N, [&](double x, int) { return x * (g.length - x) + c; });
}

}  // namespace carlab
