// SPDX-License-Identifier: Apache-2.0
#include "lightgcl/matrix.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <stdexcept>

#include "lightgcl/parallel.hpp"

namespace lightgcl {

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

void Matrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

Matrix Matrix::transposed() const {
    Matrix t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
        for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
    return t;
}

Matrix Matrix::column_block(std::size_t first, std::size_t count) const {
    if (first + count > cols_) throw std::out_of_range("column_block out of range");
    Matrix out(rows_, count);
    for (std::size_t r = 0; r < rows_; ++r)
        for (std::size_t c = 0; c < count; ++c) out(r, c) = (*this)(r, first + c);
    return out;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) throw std::invalid_argument("matmul: inner dimension mismatch");
    Matrix c(a.rows(), b.cols());
    const std::size_t inner = a.cols();
    const std::size_t n = b.cols();
    parallel_for(a.rows(), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            double* out = c.data() + i * n;
            for (std::size_t k = 0; k < inner; ++k) {
                const double aik = a(i, k);
                if (aik == 0.0) continue;
                const double* brow = b.data() + k * n;
                for (std::size_t j = 0; j < n; ++j) out[j] += aik * brow[j];
            }
        }
    });
    return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows()) throw std::invalid_argument("matmul_tn: row count mismatch");
    Matrix c(a.cols(), b.cols());
    const std::size_t p = a.cols();
    const std::size_t n = b.cols();
    for (std::size_t r = 0; r < a.rows(); ++r) {
        const double* arow = a.data() + r * p;
        const double* brow = b.data() + r * n;
        for (std::size_t i = 0; i < p; ++i) {
            const double ari = arow[i];
            if (ari == 0.0) continue;
            double* out = c.data() + i * n;
            for (std::size_t j = 0; j < n; ++j) out[j] += ari * brow[j];
        }
    }
    return c;
}

double frobenius_norm(const Matrix& a) {
    double s = 0.0;
    for (double v : a.values()) s += v * v;
    return std::sqrt(s);
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw std::invalid_argument("max_abs_diff: shape mismatch");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
    return m;
}

double dot(std::span<const double> a, std::span<const double> b) {
    assert(a.size() == b.size());
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

void add_scaled(Matrix& dst, const Matrix& src, double alpha) {
    if (dst.rows() != src.rows() || dst.cols() != src.cols()) throw std::invalid_argument("add_scaled: shape mismatch");
    double* d = dst.data();
    const double* s = src.data();
    for (std::size_t i = 0; i < dst.size(); ++i) d[i] += alpha * s[i];
}

Matrix scaled(const Matrix& a, double alpha) {
    Matrix out = a;
    for (double& v : out.values()) v *= alpha;
    return out;
}

bool all_finite(const Matrix& a) {
    return std::all_of(a.values().begin(), a.values().end(), [](double v) { return std::isfinite(v); });
}

Matrix orthonormalize_columns(const Matrix& a, double rel_tol) {
    // Work on rows of the transpose so each column is contiguous.
    const Matrix cols = a.transposed();
    const std::size_t m = a.rows();
    double max_norm = 0.0;
    for (std::size_t j = 0; j < cols.rows(); ++j) max_norm = std::max(max_norm, norm(cols.row(j)));

    std::vector<std::vector<double>> basis;
    if (max_norm == 0.0) return Matrix(m, 0);
    const double threshold = rel_tol * max_norm;

    for (std::size_t j = 0; j < cols.rows(); ++j) {
        std::vector<double> v(cols.row(j).begin(), cols.row(j).end());
        for (int pass = 0; pass < 2; ++pass) {
            for (const auto& q : basis) {
                const double proj = dot(q, v);
                for (std::size_t i = 0; i < m; ++i) v[i] -= proj * q[i];
            }
        }
        const double nv = norm(v);
        if (nv <= threshold) continue;
        for (double& x : v) x /= nv;
        basis.push_back(std::move(v));
    }

    Matrix q(m, basis.size());
    for (std::size_t c = 0; c < basis.size(); ++c)
        for (std::size_t i = 0; i < m; ++i) q(i, c) = basis[c][i];
    return q;
}

}  // namespace lightgcl
