#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "carlab/banded.hpp"
#include "carlab/grid.hpp"
#include "carlab/model.hpp"
#include "carlab/util.hpp"

namespace carlab {

enum class OperatorParts {
    DiffusionOnly,  // the principal part, operator of P^0
    Full            // diffusion + drift + reaction, operator of P
};

/// Second-order finite-difference discretization of the system operator at a
/// fixed time. Unknowns are ordered node-major (all components of a node are
/// adjacent); Dirichlet eliminates the boundary nodes, Robin keeps them with
/// ghost-node rows that build the conormal condition into the stencil.
class DiscreteOperator {
public:
    DiscreteOperator(const CoefficientSet& cs, double t, const Grid& g, BoundaryKind bc,
                     OperatorParts parts = OperatorParts::Full)
        : grid_(g), bc_(bc), components_(cs.components) {
        if (cs.dim != 1) throw ConfigError("DiscreteOperator: only 1-D operators are supported");
        assemble(cs, t, parts);
    }

    int components() const { return components_; }
    BoundaryKind boundary() const { return bc_; }
    const Grid& grid() const { return grid_; }
    const BandedMatrix& matrix() const { return mat_; }
    BandedMatrix& matrix() { return mat_; }

    int first_node() const { return bc_ == BoundaryKind::Dirichlet ? 1 : 0; }
    int unknown_nodes() const { return bc_ == BoundaryKind::Dirichlet ? grid_.nx : grid_.nodes(); }
    int unknown_count() const { return unknown_nodes() * components_; }

    /// GridFunction values -> unknown vector.
    std::vector<double> restrict_to_unknowns(const GridFunction& u) const {
        std::vector<double> v(unknown_count());
        const int n0 = first_node();
        for (int j = 0; j < unknown_nodes(); ++j) {
            for (int c = 0; c < components_; ++c) {
                v[static_cast<size_t>(j) * components_ + c] = u.at(n0 + j, c);
            }
        }
        return v;
    }

    /// Unknown vector -> GridFunction (Dirichlet boundary nodes set to zero).
    GridFunction extend_to_grid(const std::vector<double>& v) const {
        GridFunction u(grid_.nodes(), components_);
        const int n0 = first_node();
        for (int j = 0; j < unknown_nodes(); ++j) {
            for (int c = 0; c < components_; ++c) {
                u.at(n0 + j, c) = v[static_cast<size_t>(j) * components_ + c];
            }
        }
        return u;
    }

    /// A applied to a grid function. For Dirichlet the boundary rows of the
    /// result are zero (the state is constrained there, not evolved).
    GridFunction apply(const GridFunction& u) const {
        std::vector<double> x = restrict_to_unknowns(u);
        std::vector<double> y;
        mat_.apply(x, y);
        return extend_to_grid(y);
    }

    /// I - gamma*A over the unknowns, ready for factorization.
    BandedMatrix stepping_matrix(double gamma) const {
        BandedMatrix m(mat_.size(), mat_.lower_bandwidth(), mat_.upper_bandwidth());
        for (int i = 0; i < mat_.size(); ++i) {
            const int jlo = std::max(0, i - mat_.lower_bandwidth());
            const int jhi = std::min(mat_.size() - 1, i + mat_.upper_bandwidth());
            for (int j = jlo; j <= jhi; ++j) m.set(i, j, -gamma * mat_.get(i, j));
            m.add(i, i, 1.0);
        }
        return m;
    }

private:
    void assemble(const CoefficientSet& cs, double t, OperatorParts parts) {
        const int N = components_;
        const int band = 2 * N - 1;
        mat_ = BandedMatrix(unknown_count(), band, band);

        const double h = grid_.h();
        const double X = grid_.length;
        const bool robin = bc_ == BoundaryKind::Robin;
        const bool lower = parts == OperatorParts::Full;
        const int n0 = first_node();

        auto col = [&](int node, int comp) { return (node - n0) * N + comp; };
        auto a_mid = [&](int k, int l, double xm) {
            return cs.a(0, 0, k, l, std::clamp(xm, 0.0, X), t);
        };

        // Interior rows: conservative diffusion stencil, centered drift.
        for (int j = 1; j <= grid_.nx; ++j) {
            const double x = grid_.x(j);
            for (int l = 0; l < N; ++l) {
                const int row = col(j, l);
                for (int k = 0; k < N; ++k) {
                    const double ap = a_mid(k, l, x + 0.5 * h);
                    const double am = a_mid(k, l, x - 0.5 * h);
                    mat_.add(row, col(j, k), -(ap + am) / (h * h));
                    if (j + 1 <= grid_.nx || robin) mat_.add(row, col(j + 1, k), ap / (h * h));
                    if (j - 1 >= 1 || robin) mat_.add(row, col(j - 1, k), am / (h * h));
                    if (lower && cs.has_drift()) {
                        const double bk = cs.b(0, k, l, x, t);
                        if (j + 1 <= grid_.nx || robin) mat_.add(row, col(j + 1, k), bk / (2 * h));
                        if (j - 1 >= 1 || robin) mat_.add(row, col(j - 1, k), -bk / (2 * h));
                    }
                    if (lower && cs.has_reaction()) {
                        mat_.add(row, col(j, k), cs.c(k, l, x, t));
                    }
                }
            }
        }
        if (!robin) return;

        // Robin rows by ghost elimination: with Abar = [a^{kl}] at the wall,
        // the centered conormal condition gives ghost = mirror - 2hp *
        // Abar^{-1} u(wall); substituting collapses the p-coupling to
        // -(2p/h) u_l exactly because the wall-side midpoint coefficient is
        // clamped to Abar itself.
        for (int side = 0; side < 2; ++side) {
            const int j = side == 0 ? 0 : grid_.nx + 1;
            const int jin = side == 0 ? 1 : grid_.nx;  // inward neighbor
            const double x = grid_.x(j);
            const double xm_in = side == 0 ? 0.5 * h : X - 0.5 * h;
            const double pcoef = cs.p(x, t);

            // Abar^{-1}, needed only for the drift contribution.
            std::vector<double> abar_inv;
            if (lower && cs.has_drift()) {
                abar_inv.assign(static_cast<size_t>(N) * N, 0.0);
                for (int m = 0; m < N; ++m) {
                    std::vector<double> abar(static_cast<size_t>(N) * N);
                    std::vector<double> e(N, 0.0);
                    e[m] = 1.0;
                    for (int l = 0; l < N; ++l)
                        for (int k = 0; k < N; ++k)
                            abar[static_cast<size_t>(l) * N + k] = cs.a(0, 0, k, l, x, t);
                    solve_dense(abar, e, N);
                    for (int k = 0; k < N; ++k) abar_inv[static_cast<size_t>(k) * N + m] = e[k];
                }
            }

            for (int l = 0; l < N; ++l) {
                const int row = col(j, l);
                for (int k = 0; k < N; ++k) {
                    const double a_wall = cs.a(0, 0, k, l, x, t);
                    const double a_in = a_mid(k, l, xm_in);
                    mat_.add(row, col(jin, k), (a_wall + a_in) / (h * h));
                    mat_.add(row, col(j, k), -(a_wall + a_in) / (h * h));
                    if (lower && cs.has_reaction()) {
                        mat_.add(row, col(j, k), cs.c(k, l, x, t));
                    }
                    if (lower && cs.has_drift()) {
                        const double bk = cs.b(0, k, l, x, t);
                        const double sgn = side == 0 ? 1.0 : -1.0;
                        for (int m = 0; m < N; ++m) {
                            mat_.add(row, col(j, m),
                                     sgn * pcoef * bk * abar_inv[static_cast<size_t>(k) * N + m]);
                        }
                    }
                }
                mat_.add(row, col(j, l), -2.0 * pcoef / h);
            }
        }
    }

    Grid grid_;
    BoundaryKind bc_;
    int components_;
    BandedMatrix mat_;
};

/// Discrete time derivative of a trajectory at slice m: centered at interior
/// time nodes, one-sided second-order at the ends.
inline GridFunction time_derivative_slice(const Trajectory& traj, int m) {
    const double dt = traj.grid.dt();
    const int nt = traj.grid.nt;
    const auto& z = traj.slices;
    GridFunction d(z[0].nodes(), z[0].components());
    auto axpy = [&](double a, const GridFunction& src) {
        for (size_t i = 0; i < d.data().size(); ++i) d.data()[i] += a * src.data()[i];
    };
    if (m == 0) {
        axpy(-3.0 / (2 * dt), z[0]);
        axpy(4.0 / (2 * dt), z[1]);
        axpy(-1.0 / (2 * dt), z[2]);
    } else if (m == nt) {
        axpy(3.0 / (2 * dt), z[nt]);
        axpy(-4.0 / (2 * dt), z[nt - 1]);
        axpy(1.0 / (2 * dt), z[nt - 2]);
    } else {
        axpy(1.0 / (2 * dt), z[m + 1]);
        axpy(-1.0 / (2 * dt), z[m - 1]);
    }
    return d;
}

/// Space-time residual of the parabolic operator applied to a trajectory:
/// dz/dt - A(t_m) z_m per slice, with A the full operator (P) or its
/// principal part (P^0). Dirichlet boundary rows are zero by convention.
inline std::vector<GridFunction> apply_parabolic(const Trajectory& traj, const CoefficientSet& cs,
                                                 bool full) {
    if (traj.grid.nt < 2) throw ConfigError("apply_parabolic: nt >= 2 required");
    const OperatorParts parts = full ? OperatorParts::Full : OperatorParts::DiffusionOnly;
    std::vector<GridFunction> out;
    out.reserve(traj.slices.size());

    std::optional<DiscreteOperator> cached;
    if (cs.time_independent) cached.emplace(cs, 0.0, traj.grid, traj.bc, parts);
    for (int m = 0; m <= traj.grid.nt; ++m) {
        GridFunction r = time_derivative_slice(traj, m);
        const GridFunction au =
            cached ? cached->apply(traj.slices[m])
                   : DiscreteOperator(cs, traj.grid.t(m), traj.grid, traj.bc, parts)
                         .apply(traj.slices[m]);
        r -= au;
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace carlab
