#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "carlab/util.hpp"

namespace carlab {

/// Eigendecomposition of a real symmetric matrix: values ascending,
/// vectors[k] the matching unit eigenvector (Euclidean norm).
struct EigenDecomposition {
    std::vector<double> values;
    std::vector<std::vector<double>> vectors;
};

namespace detail {

inline double hypot2(double a, double b) { return std::sqrt(a * a + b * b); }

/// Implicit-shift QL for a symmetric tridiagonal matrix (diag d, subdiag e),
/// accumulating rotations into z (initialized to identity). Classic tqli.
inline void tridiag_ql(std::vector<double>& d, std::vector<double>& e,
                       std::vector<std::vector<double>>& z) {
    const int n = static_cast<int>(d.size());
    e.push_back(0.0);
    for (int l = 0; l < n; ++l) {
        int iter = 0;
        int m;
        do {
            for (m = l; m < n - 1; ++m) {
                const double dd = std::fabs(d[m]) + std::fabs(d[m + 1]);
                if (std::fabs(e[m]) <= 1e-15 * dd) break;
            }
            if (m != l) {
                if (++iter == 50) throw NumericalError("tridiag_ql: too many iterations");
                double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
                double r = hypot2(g, 1.0);
                g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
                double s = 1.0;
                double c = 1.0;
                double p = 0.0;
                bool underflow = false;
                for (int i = m - 1; i >= l; --i) {
                    double f = s * e[i];
                    const double b = c * e[i];
                    r = hypot2(f, g);
                    e[i + 1] = r;
                    if (r == 0.0) {
                        d[i + 1] -= p;
                        e[m] = 0.0;
                        underflow = true;
                        break;
                    }
                    s = f / r;
                    c = g / r;
                    g = d[i + 1] - p;
                    r = (d[i] - g) * s + 2.0 * c * b;
                    p = s * r;
                    d[i + 1] = g + p;
                    g = c * r - b;
                    for (int k = 0; k < n; ++k) {
                        f = z[k][i + 1];
                        z[k][i + 1] = s * z[k][i] + c * f;
                        z[k][i] = c * z[k][i] - s * f;
                    }
                }
                if (underflow) continue;
                d[l] -= p;
                e[l] = g;
                e[m] = 0.0;
            }
        } while (m != l);
    }
}

}  // namespace detail

/// Eigendecomposition of a symmetric tridiagonal matrix given its diagonal
/// and subdiagonal.
inline EigenDecomposition tridiagonal_eigen(std::vector<double> diag, std::vector<double> sub) {
    const int n = static_cast<int>(diag.size());
    std::vector<std::vector<double>> z(n, std::vector<double>(n, 0.0));
    for (int i = 0; i < n; ++i) z[i][i] = 1.0;
    detail::tridiag_ql(diag, sub, z);

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return diag[a] < diag[b]; });

    EigenDecomposition out;
    out.values.resize(n);
    out.vectors.assign(n, std::vector<double>(n));
    for (int k = 0; k < n; ++k) {
        out.values[k] = diag[order[k]];
        for (int i = 0; i < n; ++i) out.vectors[k][i] = z[i][order[k]];
    }
    return out;
}

/// Cyclic Jacobi for a dense symmetric matrix (row-major, size n*n). O(n^3)
/// per sweep; intended for the modest matrices of the coupled cases.
inline EigenDecomposition jacobi_eigen(std::vector<double> a, int n, int max_sweeps = 64) {
    std::vector<double> v(static_cast<size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) v[static_cast<size_t>(i) * n + i] = 1.0;
    auto A = [&](int i, int j) -> double& { return a[static_cast<size_t>(i) * n + j]; };
    auto V = [&](int i, int j) -> double& { return v[static_cast<size_t>(i) * n + j]; };

    double norm = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) norm = std::max(norm, std::fabs(A(i, j)));
    }
    const double tol = 1e-14 * std::max(norm, 1.0);

    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) off = std::max(off, std::fabs(A(p, q)));
        }
        if (off <= tol) break;
        if (sweep == max_sweeps - 1) throw NumericalError("jacobi_eigen: no convergence");

        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double apq = A(p, q);
                if (std::fabs(apq) <= tol * 1e-2) continue;
                const double theta = (A(q, q) - A(p, p)) / (2.0 * apq);
                const double t = std::copysign(1.0, theta) /
                                 (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int k = 0; k < n; ++k) {
                    const double akp = A(k, p);
                    const double akq = A(k, q);
                    A(k, p) = c * akp - s * akq;
                    A(k, q) = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    const double apk = A(p, k);
                    const double aqk = A(q, k);
                    A(p, k) = c * apk - s * aqk;
                    A(q, k) = s * apk + c * aqk;
                }
                for (int k = 0; k < n; ++k) {
                    const double vkp = V(k, p);
                    const double vkq = V(k, q);
                    V(k, p) = c * vkp - s * vkq;
                    V(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int x, int y) { return A(x, x) < A(y, y); });

    EigenDecomposition out;
    out.values.resize(n);
    out.vectors.assign(n, std::vector<double>(n));
    for (int k = 0; k < n; ++k) {
        out.values[k] = A(order[k], order[k]);
        for (int i = 0; i < n; ++i) out.vectors[k][i] = V(i, order[k]);
    }
    return out;
}

}  // namespace carlab
