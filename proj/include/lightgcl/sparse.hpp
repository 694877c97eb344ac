// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "lightgcl/matrix.hpp"

namespace lightgcl {

struct Triplet {
    std::uint32_t row;
    std::uint32_t col;
    double value;
};

// I x J sparse matrix kept in both row-compressed (CSR) and column-compressed
// (CSC) form, so that A*X and A^T*X are both row-parallel gathers. Immutable
// after construction.
//
// Entry order is the CSR order; csc_to_csr() maps each CSC slot back to it.
// Edge masks and value overrides are indexed in CSR order.
class SparseBipartite {
public:
    SparseBipartite() = default;

    // Duplicate coordinates are rejected.
    static SparseBipartite from_triplets(std::size_t rows, std::size_t cols, std::vector<Triplet> entries);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t nnz() const { return csr_col_.size(); }

    const std::vector<std::size_t>& row_offsets() const { return csr_offsets_; }
    const std::vector<std::uint32_t>& col_indices() const { return csr_col_; }
    const std::vector<double>& values() const { return csr_values_; }

    const std::vector<std::size_t>& col_offsets() const { return csc_offsets_; }
    const std::vector<std::uint32_t>& row_indices() const { return csc_row_; }
    const std::vector<double>& csc_values() const { return csc_values_; }
    const std::vector<std::size_t>& csc_to_csr() const { return csc_to_csr_; }

    // Same sparsity pattern with new values (CSR order). Explicit zeros are kept.
    SparseBipartite with_values(std::vector<double> csr_values) const;

    // Value at (r, c); 0 when not stored.
    double at(std::size_t r, std::size_t c) const;

    // (rows x cols) * (cols x d) -> rows x d
    Matrix multiply(const Matrix& x) const;
    // (cols x rows) * (rows x d) -> cols x d
    Matrix multiply_transpose(const Matrix& x) const;

    Matrix to_dense() const;
    std::vector<Triplet> triplets() const;

    // Binary cache: magic, version, rows, cols, nnz (u64 LE), then row
    // offsets (u64), column indices (u32) and values (f64).
    void save(const std::filesystem::path& path) const;
    static SparseBipartite load(const std::filesystem::path& path);

    bool operator==(const SparseBipartite& o) const = default;

private:
    void build_csc();

    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<std::size_t> csr_offsets_{0};
    std::vector<std::uint32_t> csr_col_;
    std::vector<double> csr_values_;
    std::vector<std::size_t> csc_offsets_{0};
    std::vector<std::uint32_t> csc_row_;
    std::vector<double> csc_values_;
    std::vector<std::size_t> csc_to_csr_;
};

}  // namespace lightgcl
