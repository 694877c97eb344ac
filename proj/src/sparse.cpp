// SPDX-License-Identifier: Apache-2.0
#include "lightgcl/sparse.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "lightgcl/binary_io.hpp"
#include "lightgcl/errors.hpp"
#include "lightgcl/parallel.hpp"

namespace lightgcl {

namespace {
constexpr std::uint64_t kAdjMagic = binary::magic("LGCLADJ1");
constexpr std::uint64_t kAdjVersion = 1;
}  // namespace

SparseBipartite SparseBipartite::from_triplets(std::size_t rows, std::size_t cols, std::vector<Triplet> entries) {
    std::sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
        return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    SparseBipartite m;
    m.rows_ = rows;
    m.cols_ = cols;
    m.csr_offsets_.assign(rows + 1, 0);
    m.csr_col_.reserve(entries.size());
    m.csr_values_.reserve(entries.size());
    for (std::size_t k = 0; k < entries.size(); ++k) {
        const Triplet& t = entries[k];
        if (t.row >= rows || t.col >= cols)
            throw std::out_of_range("triplet (" + std::to_string(t.row) + "," + std::to_string(t.col) + ") outside " +
                                    std::to_string(rows) + "x" + std::to_string(cols));
        if (k > 0 && entries[k - 1].row == t.row && entries[k - 1].col == t.col)
            throw std::invalid_argument("duplicate sparse entry");
        ++m.csr_offsets_[t.row + 1];
        m.csr_col_.push_back(t.col);
        m.csr_values_.push_back(t.value);
    }
    for (std::size_t r = 0; r < rows; ++r) m.csr_offsets_[r + 1] += m.csr_offsets_[r];
    m.build_csc();
    return m;
}

void SparseBipartite::build_csc() {
    const std::size_t n = nnz();
    csc_offsets_.assign(cols_ + 1, 0);
    for (std::uint32_t c : csr_col_) ++csc_offsets_[c + 1];
    for (std::size_t c = 0; c < cols_; ++c) csc_offsets_[c + 1] += csc_offsets_[c];
    csc_row_.assign(n, 0);
    csc_values_.assign(n, 0.0);
    csc_to_csr_.assign(n, 0);
    std::vector<std::size_t> cursor(csc_offsets_.begin(), csc_offsets_.end() - 1);
    // Rows are visited in ascending order, so rows within each column come out sorted.
    for (std::size_t r = 0; r < rows_; ++r) {
        for (std::size_t k = csr_offsets_[r]; k < csr_offsets_[r + 1]; ++k) {
            const std::size_t slot = cursor[csr_col_[k]]++;
            csc_row_[slot] = static_cast<std::uint32_t>(r);
            csc_values_[slot] = csr_values_[k];
            csc_to_csr_[slot] = k;
        }
    }
}

SparseBipartite SparseBipartite::with_values(std::vector<double> csr_values) const {
    if (csr_values.size() != nnz()) throw std::invalid_argument("with_values: expected one value per stored entry");
    SparseBipartite m = *this;
    m.csr_values_ = std::move(csr_values);
    for (std::size_t slot = 0; slot < m.csc_values_.size(); ++slot) m.csc_values_[slot] = m.csr_values_[m.csc_to_csr_[slot]];
    return m;
}

double SparseBipartite::at(std::size_t r, std::size_t c) const {
    if (r >= rows_ || c >= cols_) throw std::out_of_range("SparseBipartite::at");
    const auto first = csr_col_.begin() + static_cast<std::ptrdiff_t>(csr_offsets_[r]);
    const auto last = csr_col_.begin() + static_cast<std::ptrdiff_t>(csr_offsets_[r + 1]);
    const auto it = std::lower_bound(first, last, static_cast<std::uint32_t>(c));
    if (it == last || *it != c) return 0.0;
    return csr_values_[static_cast<std::size_t>(it - csr_col_.begin())];
}

Matrix SparseBipartite::multiply(const Matrix& x) const {
    if (x.rows() != cols_) throw ConfigError("sparse multiply: expected " + std::to_string(cols_) + " rows, got " + std::to_string(x.rows()));
    const std::size_t d = x.cols();
    Matrix out(rows_, d);
    parallel_for(rows_, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t r = lo; r < hi; ++r) {
            double* o = out.data() + r * d;
            for (std::size_t k = csr_offsets_[r]; k < csr_offsets_[r + 1]; ++k) {
                const double w = csr_values_[k];
                const double* xr = x.data() + static_cast<std::size_t>(csr_col_[k]) * d;
                for (std::size_t j = 0; j < d; ++j) o[j] += w * xr[j];
            }
        }
    });
    return out;
}

Matrix SparseBipartite::multiply_transpose(const Matrix& x) const {
    if (x.rows() != rows_) throw ConfigError("sparse multiply_transpose: expected " + std::to_string(rows_) + " rows, got " + std::to_string(x.rows()));
    const std::size_t d = x.cols();
    Matrix out(cols_, d);
    parallel_for(cols_, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t c = lo; c < hi; ++c) {
            double* o = out.data() + c * d;
            for (std::size_t k = csc_offsets_[c]; k < csc_offsets_[c + 1]; ++k) {
                const double w = csc_values_[k];
                const double* xr = x.data() + static_cast<std::size_t>(csc_row_[k]) * d;
                for (std::size_t j = 0; j < d; ++j) o[j] += w * xr[j];
            }
        }
    });
    return out;
}

Matrix SparseBipartite::to_dense() const {
    Matrix m(rows_, cols_);
    for (std::size_t r = 0; r < rows_; ++r)
        for (std::size_t k = csr_offsets_[r]; k < csr_offsets_[r + 1]; ++k) m(r, csr_col_[k]) = csr_values_[k];
    return m;
}

std::vector<Triplet> SparseBipartite::triplets() const {
    std::vector<Triplet> t;
    t.reserve(nnz());
    for (std::size_t r = 0; r < rows_; ++r)
        for (std::size_t k = csr_offsets_[r]; k < csr_offsets_[r + 1]; ++k)
            t.push_back({static_cast<std::uint32_t>(r), csr_col_[k], csr_values_[k]});
    return t;
}

void SparseBipartite::save(const std::filesystem::path& path) const {
    binary::Writer w(path);
    w.u64(kAdjMagic);
    w.u64(kAdjVersion);
    w.u64(rows_);
    w.u64(cols_);
    w.u64(nnz());
    std::vector<std::uint64_t> offsets(csr_offsets_.begin(), csr_offsets_.end());
    w.array<std::uint64_t>(offsets);
    w.array<std::uint32_t>(csr_col_);
    w.array<double>(csr_values_);
    w.close();
}

SparseBipartite SparseBipartite::load(const std::filesystem::path& path) {
    binary::Reader r(path);
    if (r.u64() != kAdjMagic) throw DataError(path.string() + ": not an adjacency cache");
    if (const auto v = r.u64(); v != kAdjVersion) throw DataError(path.string() + ": unsupported version " + std::to_string(v));
    SparseBipartite m;
    m.rows_ = r.u64();
    m.cols_ = r.u64();
    const std::size_t n = r.u64();
    const auto offsets = r.array<std::uint64_t>(m.rows_ + 1);
    m.csr_offsets_.assign(offsets.begin(), offsets.end());
    m.csr_col_ = r.array<std::uint32_t>(n);
    m.csr_values_ = r.array<double>(n);
    r.expect_end();
    if (m.csr_offsets_.front() != 0 || m.csr_offsets_.back() != n) throw DataError(path.string() + ": corrupt row offsets");
    for (std::size_t row = 0; row < m.rows_; ++row) {
        if (m.csr_offsets_[row] > m.csr_offsets_[row + 1]) throw DataError(path.string() + ": corrupt row offsets");
        for (std::size_t k = m.csr_offsets_[row]; k < m.csr_offsets_[row + 1]; ++k) {
            if (m.csr_col_[k] >= m.cols_ || (k > m.csr_offsets_[row] && m.csr_col_[k] <= m.csr_col_[k - 1]))
                throw DataError(path.string() + ": corrupt column indices");
        }
    }
    m.build_csc();
    return m;
}

}  // namespace lightgcl
