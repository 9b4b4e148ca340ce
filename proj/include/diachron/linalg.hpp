#pragma once

// Small dense matrix helpers. Everything downstream works on tiny systems
// (design matrices with a handful of columns, contingency tables up to
// ~10x10), so plain O(n^3) routines with doubles are the right tool.

#include <cmath>
#include <initializer_list>
#include <vector>

#include "diachron/errors.hpp"

namespace diachron {

struct RankDeficient : NumericError {
    RankDeficient() : NumericError("RankDeficient", "design matrix is rank deficient") {}
};

class Matrix {
public:
    Matrix() = default;
    Matrix(size_t r, size_t c, double fill = 0.0) : r_(r), c_(c), d_(r * c, fill) {}

    static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
        Matrix m(rows.size(), rows.begin()->size());
        size_t i = 0;
        for (const auto& row : rows) {
            size_t j = 0;
            for (double v : row) m(i, j++) = v;
            ++i;
        }
        return m;
    }

    size_t rows() const { return r_; }
    size_t cols() const { return c_; }
    double& operator()(size_t i, size_t j) { return d_[i * c_ + j]; }
    double operator()(size_t i, size_t j) const { return d_[i * c_ + j]; }

    Matrix transposed() const {
        Matrix t(c_, r_);
        for (size_t i = 0; i < r_; ++i)
            for (size_t j = 0; j < c_; ++j) t(j, i) = (*this)(i, j);
        return t;
    }

    Matrix operator*(const Matrix& o) const {
        Matrix out(r_, o.c_);
        for (size_t i = 0; i < r_; ++i)
            for (size_t k = 0; k < c_; ++k) {
                double a = (*this)(i, k);
                if (a == 0) continue;
                for (size_t j = 0; j < o.c_; ++j) out(i, j) += a * o(k, j);
            }
        return out;
    }

    double sum() const {
        double s = 0;
        for (double v : d_) s += v;
        return s;
    }

private:
    size_t r_ = 0, c_ = 0;
    std::vector<double> d_;
};

// Solve A x = b for symmetric positive definite A via Cholesky.
inline std::vector<double> cholesky_solve(const Matrix& A, const std::vector<double>& b) {
    size_t n = A.rows();
    Matrix L(n, n);
    for (size_t j = 0; j < n; ++j) {
        double diag = A(j, j);
        for (size_t k = 0; k < j; ++k) diag -= L(j, k) * L(j, k);
        if (!(diag > 1e-12 * (std::abs(A(j, j)) + 1e-30))) throw RankDeficient();
        L(j, j) = std::sqrt(diag);
        for (size_t i = j + 1; i < n; ++i) {
            double v = A(i, j);
            for (size_t k = 0; k < j; ++k) v -= L(i, k) * L(j, k);
            L(i, j) = v / L(j, j);
        }
    }
    std::vector<double> y(n), x(n);
    for (size_t i = 0; i < n; ++i) {
        double v = b[i];
        for (size_t k = 0; k < i; ++k) v -= L(i, k) * y[k];
        y[i] = v / L(i, i);
    }
    for (size_t ii = n; ii-- > 0;) {
        double v = y[ii];
        for (size_t k = ii + 1; k < n; ++k) v -= L(k, ii) * x[k];
        x[ii] = v / L(ii, ii);
    }
    return x;
}

// Inverse of an SPD matrix (for coefficient covariances).
inline Matrix spd_inverse(const Matrix& A) {
    size_t n = A.rows();
    Matrix inv(n, n);
    for (size_t j = 0; j < n; ++j) {
        std::vector<double> e(n, 0.0);
        e[j] = 1.0;
        auto col = cholesky_solve(A, e);
        for (size_t i = 0; i < n; ++i) inv(i, j) = col[i];
    }
    return inv;
}

struct Svd {
    Matrix u;                     // m x k
    std::vector<double> sigma;    // k, descending
    Matrix v;                     // n x k
};

// One-sided Jacobi SVD: rotate column pairs of a working copy until all are
// orthogonal; singular values are the column norms, V accumulates rotations.
inline Svd jacobi_svd(const Matrix& a, double tol = 1e-12) {
    bool flip = a.rows() < a.cols();
    Matrix w = flip ? a.transposed() : a;
    size_t m = w.rows(), n = w.cols();
    Matrix v(n, n);
    for (size_t i = 0; i < n; ++i) v(i, i) = 1.0;

    for (int sweep = 0; sweep < 60; ++sweep) {
        bool rotated = false;
        for (size_t p = 0; p + 1 < n; ++p) {
            for (size_t q = p + 1; q < n; ++q) {
                double alpha = 0, beta = 0, gamma = 0;
                for (size_t i = 0; i < m; ++i) {
                    alpha += w(i, p) * w(i, p);
                    beta += w(i, q) * w(i, q);
                    gamma += w(i, p) * w(i, q);
                }
                if (std::abs(gamma) <= tol * std::sqrt(alpha * beta) || gamma == 0) continue;
                rotated = true;
                double zeta = (beta - alpha) / (2.0 * gamma);
                double t = (zeta >= 0 ? 1.0 : -1.0) /
                           (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                double c = 1.0 / std::sqrt(1.0 + t * t);
                double s = c * t;
                for (size_t i = 0; i < m; ++i) {
                    double wp = w(i, p), wq = w(i, q);
                    w(i, p) = c * wp - s * wq;
                    w(i, q) = s * wp + c * wq;
                }
                for (size_t i = 0; i < n; ++i) {
                    double vp = v(i, p), vq = v(i, q);
                    v(i, p) = c * vp - s * vq;
                    v(i, q) = s * vp + c * vq;
                }
            }
        }
        if (!rotated) break;
    }

    std::vector<double> sig(n);
    Matrix u(m, n);
    for (size_t j = 0; j < n; ++j) {
        double norm = 0;
        for (size_t i = 0; i < m; ++i) norm += w(i, j) * w(i, j);
        norm = std::sqrt(norm);
        sig[j] = norm;
        for (size_t i = 0; i < m; ++i) u(i, j) = norm > tol ? w(i, j) / norm : 0.0;
    }
    // sort by descending singular value
    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](size_t x, size_t y) { return sig[x] > sig[y]; });
    Svd out;
    out.sigma.resize(n);
    out.u = Matrix(m, n);
    out.v = Matrix(n, n);
    for (size_t j = 0; j < n; ++j) {
        out.sigma[j] = sig[order[j]];
        for (size_t i = 0; i < m; ++i) out.u(i, j) = u(i, order[j]);
        for (size_t i = 0; i < n; ++i) out.v(i, j) = v(i, order[j]);
    }
    if (flip) std::swap(out.u, out.v);
    return out;
}

} // namespace diachron
