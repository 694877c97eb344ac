// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace lightgcl {

// Dense row-major f64 matrix. Embedding tables, SVD factors and propagated
// layers are all stored this way.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix identity(std::size_t n);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& values() { return data_; }
    const std::vector<double>& values() const { return data_; }

    void fill(double v);
    Matrix transposed() const;
    Matrix column_block(std::size_t first, std::size_t count) const;

    bool operator==(const Matrix& o) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// C = A * B
Matrix matmul(const Matrix& a, const Matrix& b);
// C = A^T * B; the reduction over rows of A runs in a fixed order.
Matrix matmul_tn(const Matrix& a, const Matrix& b);

double frobenius_norm(const Matrix& a);
double max_abs_diff(const Matrix& a, const Matrix& b);
double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> a);

// dst += alpha * src
void add_scaled(Matrix& dst, const Matrix& src, double alpha = 1.0);
Matrix scaled(const Matrix& a, double alpha);

bool all_finite(const Matrix& a);

// Modified Gram-Schmidt with one full re-orthogonalisation pass. Columns whose
// residual norm falls below rel_tol times the largest input column norm are
// dropped, so the result has between 0 and a.cols() orthonormal columns.
Matrix orthonormalize_columns(const Matrix& a, double rel_tol = 1e-10);

}  // namespace lightgcl
