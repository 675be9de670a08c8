#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "evinv/errors.hpp"

namespace evinv {

/// Dense square matrix, row-major storage.
class DenseMatrix {
public:
    DenseMatrix() = default;
    explicit DenseMatrix(std::size_t n) : n_(n), a_(n * n, 0.0) {}
    DenseMatrix(std::size_t n, std::initializer_list<double> entries)
        : n_(n), a_(entries) {
        if (a_.size() != n * n) {
            throw config_error("DenseMatrix: initializer size does not match dimension");
        }
    }

    std::size_t dim() const { return n_; }
    double& operator()(std::size_t i, std::size_t j) { return a_[i * n_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a_[i * n_ + j]; }
    std::span<const double> data() const { return a_; }

    /// out = this * v
    void multiply(std::span<const double> v, std::span<double> out) const {
        for (std::size_t i = 0; i < n_; ++i) {
            double s = 0.0;
            const double* row = a_.data() + i * n_;
            for (std::size_t j = 0; j < n_; ++j) s += row[j] * v[j];
            out[i] = s;
        }
    }

private:
    std::size_t n_ = 0;
    std::vector<double> a_;
};

/// LU factorization with partial pivoting, for the small dense systems of
/// the matrix-family backend. Factor once, solve many right-hand sides.
class DenseLu {
public:
    DenseLu() = default;

    /// Factors PA = LU. `where` names the offending time node in errors.
    static DenseLu factor(const DenseMatrix& a, const std::string& where) {
        DenseLu f;
        const std::size_t n = a.dim();
        f.n_ = n;
        f.lu_.assign(a.data().begin(), a.data().end());
        f.piv_.resize(n);
        for (std::size_t k = 0; k < n; ++k) {
            std::size_t p = k;
            double best = std::abs(f.lu_[k * n + k]);
            for (std::size_t i = k + 1; i < n; ++i) {
                const double cand = std::abs(f.lu_[i * n + k]);
                if (cand > best) { best = cand; p = i; }
            }
            if (!(best > 0.0) || !std::isfinite(best)) {
                throw numeric_error("singular system matrix at " + where);
            }
            f.piv_[k] = p;
            if (p != k) {
                for (std::size_t j = 0; j < n; ++j)
                    std::swap(f.lu_[k * n + j], f.lu_[p * n + j]);
            }
            const double pivot = f.lu_[k * n + k];
            for (std::size_t i = k + 1; i < n; ++i) {
                const double m = f.lu_[i * n + k] / pivot;
                f.lu_[i * n + k] = m;
                for (std::size_t j = k + 1; j < n; ++j)
                    f.lu_[i * n + j] -= m * f.lu_[k * n + j];
            }
        }
        return f;
    }

    void solve_in_place(std::span<double> b) const {
        const std::size_t n = n_;
        for (std::size_t k = 0; k < n; ++k) {
            if (piv_[k] != k) std::swap(b[k], b[piv_[k]]);
            for (std::size_t i = k + 1; i < n; ++i) b[i] -= lu_[i * n + k] * b[k];
        }
        for (std::size_t i = n; i-- > 0;) {
            double s = b[i];
            for (std::size_t j = i + 1; j < n; ++j) s -= lu_[i * n + j] * b[j];
            b[i] = s / lu_[i * n + i];
        }
    }

private:
    std::size_t n_ = 0;
    std::vector<double> lu_;
    std::vector<std::size_t> piv_;
};

/// Tridiagonal matrix: sub[i], diag[i], sup[i] for row i.
/// sub[0] and sup[n-1] are unused and kept at zero.
struct Tridiagonal {
    std::vector<double> sub, diag, sup;

    Tridiagonal() = default;
    explicit Tridiagonal(std::size_t n) : sub(n, 0.0), diag(n, 0.0), sup(n, 0.0) {}

    std::size_t dim() const { return diag.size(); }

    void multiply(std::span<const double> v, std::span<double> out) const {
        const std::size_t n = dim();
        for (std::size_t i = 0; i < n; ++i) {
            double s = diag[i] * v[i];
            if (i > 0) s += sub[i] * v[i - 1];
            if (i + 1 < n) s += sup[i] * v[i + 1];
            out[i] = s;
        }
    }
};

/// Thomas factorization of a tridiagonal system, reusable across many
/// right-hand sides. No pivoting; a vanishing pivot is a hard error.
class TridiagonalLu {
public:
    TridiagonalLu() = default;

    static TridiagonalLu factor(const Tridiagonal& t, const std::string& where) {
        TridiagonalLu f;
        const std::size_t n = t.dim();
        f.sub_ = t.sub;
        f.cp_.resize(n, 0.0);
        f.minv_.resize(n, 0.0);
        double m = t.diag[0];
        for (std::size_t i = 0;; ++i) {
            if (!(std::abs(m) > 0.0) || !std::isfinite(m)) {
                throw numeric_error("singular system matrix at " + where);
            }
            f.minv_[i] = 1.0 / m;
            if (i + 1 >= n) break;
            f.cp_[i] = t.sup[i] * f.minv_[i];
            m = t.diag[i + 1] - t.sub[i + 1] * f.cp_[i];
        }
        return f;
    }

    void solve_in_place(std::span<double> b) const {
        const std::size_t n = minv_.size();
        b[0] *= minv_[0];
        for (std::size_t i = 1; i < n; ++i) {
            b[i] = (b[i] - sub_[i] * b[i - 1]) * minv_[i];
        }
        for (std::size_t i = n - 1; i-- > 0;) {
            b[i] -= cp_[i] * b[i + 1];
        }
    }

private:
    std::vector<double> sub_;
    std::vector<double> cp_;   // eliminated superdiagonal
    std::vector<double> minv_; // reciprocal pivots
};

} // namespace evinv
