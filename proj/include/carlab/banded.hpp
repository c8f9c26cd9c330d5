#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "carlab/util.hpp"

namespace carlab {

/// Square banded matrix with kl sub- and ku super-diagonals, stored in the
/// LAPACK band layout (diagonals as rows, kl extra rows for pivot fill-in):
/// A(i,j) lives at store[j*ldab + kl + ku + i - j].
class BandedMatrix {
public:
    BandedMatrix() = default;
    BandedMatrix(int n, int kl, int ku)
        : n_(n), kl_(kl), ku_(ku), ldab_(2 * kl + ku + 1),
          store_(static_cast<size_t>(ldab_) * n, 0.0) {}

    int size() const { return n_; }
    int lower_bandwidth() const { return kl_; }
    int upper_bandwidth() const { return ku_; }

    bool in_band(int i, int j) const {
        return i >= std::max(0, j - ku_) && i <= std::min(n_ - 1, j + kl_);
    }

    double get(int i, int j) const {
        return in_band(i, j) ? store_[idx(i, j)] : 0.0;
    }

    void set(int i, int j, double v) { store_[idx(i, j)] = v; }
    void add(int i, int j, double v) { store_[idx(i, j)] += v; }

    /// y = A x
    void apply(const std::vector<double>& x, std::vector<double>& y) const {
        y.assign(n_, 0.0);
        for (int j = 0; j < n_; ++j) {
            const double xj = x[j];
            if (xj == 0.0) continue;
            const int ilo = std::max(0, j - ku_);
            const int ihi = std::min(n_ - 1, j + kl_);
            for (int i = ilo; i <= ihi; ++i) y[i] += store_[idx(i, j)] * xj;
        }
    }

    /// In-place LU with partial pivoting (band version of dgbtrf). Fill-in
    /// stays inside the widened band; row swaps are restricted to the pivot
    /// window, which is what the extra kl rows of the layout are for.
    void factor() {
        pivot_.assign(n_, 0);
        const int kv = kl_ + ku_;  // effective superdiagonals after pivoting
        for (int j = 0; j < n_; ++j) {
            const int ihi = std::min(n_ - 1, j + kl_);
            int piv = j;
            double pmax = std::fabs(store_[idx(j, j)]);
            for (int i = j + 1; i <= ihi; ++i) {
                const double v = std::fabs(store_[idx(i, j)]);
                if (v > pmax) {
                    pmax = v;
                    piv = i;
                }
            }
            if (pmax < 1e-300) throw NumericalError("BandedMatrix::factor: singular pivot");
            pivot_[j] = piv;
            const int jhi = std::min(n_ - 1, j + kv);
            if (piv != j) {
                for (int c = j; c <= jhi; ++c) std::swap(store_[idx(piv, c)], store_[idx(j, c)]);
            }
            const double inv = 1.0 / store_[idx(j, j)];
            for (int i = j + 1; i <= ihi; ++i) {
                const double m = store_[idx(i, j)] * inv;
                store_[idx(i, j)] = m;
                if (m == 0.0) continue;
                for (int c = j + 1; c <= jhi; ++c) store_[idx(i, c)] -= m * store_[idx(j, c)];
            }
        }
        factored_ = true;
    }

    bool factored() const { return factored_; }

    /// Solves A x = b using the stored factorization; b is overwritten.
    void solve(std::vector<double>& b) const {
        if (!factored_) throw NumericalError("BandedMatrix::solve: factor() not called");
        for (int j = 0; j < n_; ++j) {
            if (pivot_[j] != j) std::swap(b[j], b[pivot_[j]]);
            const int ihi = std::min(n_ - 1, j + kl_);
            const double bj = b[j];
            if (bj == 0.0) continue;
            for (int i = j + 1; i <= ihi; ++i) b[i] -= store_[idx(i, j)] * bj;
        }
        const int kv = kl_ + ku_;
        for (int i = n_ - 1; i >= 0; --i) {
            double s = b[i];
            const int jhi = std::min(n_ - 1, i + kv);
            for (int j = i + 1; j <= jhi; ++j) s -= store_[idx(i, j)] * b[j];
            b[i] = s / store_[idx(i, i)];
        }
    }

private:
    size_t idx(int i, int j) const {
        return static_cast<size_t>(j) * ldab_ + (kl_ + ku_ + i - j);
    }

    int n_ = 0;
    int kl_ = 0;
    int ku_ = 0;
    int ldab_ = 0;
    std::vector<double> store_;
    std::vector<int> pivot_;
    bool factored_ = false;
};

}  // namespace carlab
