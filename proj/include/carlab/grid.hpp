#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "carlab/util.hpp"

namespace carlab {

/// Uniform space-time lattice on (0, X) x (0, T). Interior spatial nodes are
/// x_1..x_nx; x_0 and x_{nx+1} are the boundary. Time nodes are t_m = m*dt,
/// m = 0..nt.
struct Grid {
    double length = 3.14159265358979323846;  // X
    int nx = 3;                              // interior node count
    double horizon = 1.0;                    // T
    int nt = 2;                              // time step count

    Grid() = default;
    Grid(double X, int nx_, double T, int nt_) : length(X), nx(nx_), horizon(T), nt(nt_) {
        if (!(length > 0.0) || !(horizon > 0.0) || nx < 3 || nt < 2) {
            throw ConfigError("Grid: need X > 0, T > 0, nx >= 3, nt >= 2");
        }
    }

    double h() const { return length / (nx + 1); }
    double dt() const { return horizon / nt; }
    double x(int i) const { return h() * i; }  // i = 0..nx+1
    double t(int m) const { return dt() * m; }
    int nodes() const { return nx + 2; }       // including boundary
};

/// N-component field sampled on all nodes of a Grid (boundary included).
/// Storage is node-major so that the node-major unknown ordering of the
/// banded operators maps onto contiguous slices.
class GridFunction {
public:
    GridFunction() = default;
    GridFunction(int nodes, int components)
        : nodes_(nodes), components_(components), data_(static_cast<size_t>(nodes) * components, 0.0) {}

    double& at(int node, int comp) { return data_[static_cast<size_t>(node) * components_ + comp]; }
    double at(int node, int comp) const { return data_[static_cast<size_t>(node) * components_ + comp]; }

    int nodes() const { return nodes_; }
    int components() const { return components_; }
    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

    bool finite() const {
        for (double v : data_) {
            if (!std::isfinite(v)) return false;
        }
        return true;
    }

    GridFunction& operator+=(const GridFunction& o) {
        for (size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
        return *this;
    }
    GridFunction& operator-=(const GridFunction& o) {
        for (size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
        return *this;
    }
    GridFunction& operator*=(double a) {
        for (double& v : data_) v *= a;
        return *this;
    }

    friend GridFunction operator-(GridFunction a, const GridFunction& b) { return a -= b; }
    friend GridFunction operator+(GridFunction a, const GridFunction& b) { return a += b; }
    friend GridFunction operator*(double s, GridFunction a) { return a *= s; }

private:
    int nodes_ = 0;
    int components_ = 0;
    std::vector<double> data_;
};

enum class BoundaryKind { Dirichlet, Robin };

/// Time-indexed family of grid functions, the discrete stand-in for a
/// solution path of the system.
struct Trajectory {
    Grid grid;
    BoundaryKind bc = BoundaryKind::Dirichlet;
    std::vector<GridFunction> slices;  // size nt+1

    int components() const { return slices.empty() ? 0 : slices.front().components(); }

    bool finite() const {
        for (const auto& s : slices) {
            if (!s.finite()) return false;
        }
        return true;
    }

    /// Largest boundary-node magnitude over all slices; zero (to round-off)
    /// for a Dirichlet-compliant trajectory.
    double max_boundary_value() const {
        double m = 0.0;
        for (const auto& s : slices) {
            for (int c = 0; c < s.components(); ++c) {
                m = std::max(m, std::fabs(s.at(0, c)));
                m = std::max(m, std::fabs(s.at(s.nodes() - 1, c)));
            }
        }
        return m;
    }
};

/// Samples u(x) = f(x) per component on every node.
template <class F>
GridFunction sample(const Grid& g, int components, F&& f) {
    GridFunction u(g.nodes(), components);
    for (int i = 0; i < g.nodes(); ++i) {
        for (int c = 0; c < components; ++c) u.at(i, c) = f(g.x(i), c);
    }
    return u;
}

/// Random trigonometric field with decaying mode amplitudes; boundary values
/// are generically nonzero (cos modes included).
inline GridFunction random_smooth_field(const Grid& g, int components, Rng& rng, int modes = 8) {
    const double w = 3.14159265358979323846 / g.length;
    GridFunction u(g.nodes(), components);
    for (int c = 0; c < components; ++c) {
        std::vector<double> ac(modes + 1), as(modes + 1);
        for (int k = 0; k <= modes; ++k) {
            const double decay = 1.0 / ((1.0 + k) * (1.0 + k));
            ac[k] = rng.normal() * decay;
            as[k] = rng.normal() * decay;
        }
        for (int i = 0; i < g.nodes(); ++i) {
            double v = ac[0];
            for (int k = 1; k <= modes; ++k) {
                v += ac[k] * std::cos(k * w * g.x(i)) + as[k] * std::sin(k * w * g.x(i));
            }
            u.at(i, c) = v;
        }
    }
    return u;
}

/// Random sine combination, exactly zero on the boundary.
inline GridFunction random_dirichlet_field(const Grid& g, int components, Rng& rng, int modes = 6) {
    const double w = 3.14159265358979323846 / g.length;
    GridFunction u(g.nodes(), components);
    for (int c = 0; c < components; ++c) {
        std::vector<double> as(modes + 1);
        for (int k = 1; k <= modes; ++k) as[k] = rng.normal() / (static_cast<double>(k) * k);
        for (int i = 1; i <= g.nx; ++i) {
            double v = 0.0;
            for (int k = 1; k <= modes; ++k) v += as[k] * std::sin(k * w * g.x(i));
            u.at(i, c) = v;
        }
    }
    return u;
}

}  // namespace carlab
