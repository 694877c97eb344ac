// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "lightgcl/matrix.hpp"
#include "lightgcl/sparse.hpp"

namespace lightgcl {

// Thin SVD: A (m x n) = U diag(S) V^T with k = min(m, n) columns in U and V.
struct SvdResult {
    Matrix u;
    std::vector<double> s;
    Matrix v;
};

// Largest min(m, n) accepted by exact_svd.
inline constexpr std::size_t kExactSvdMaxDim = 512;

// One-sided Jacobi SVD of a dense matrix. Singular values are returned in
// descending order. Columns of U that belong to (numerically) zero singular
// values are completed to an orthonormal set.
SvdResult exact_svd(const Matrix& a);

struct RsvdConfig {
    std::size_t rank = 5;
    // Extra sketch columns; defaults to `rank` when unset.
    std::optional<std::size_t> oversample;
    std::size_t power_iters = 2;
    std::uint64_t seed = 0;

    std::size_t effective_oversample() const { return oversample.value_or(rank); }
};

// Rank-q factors U_hat (I x q), S_hat (q), V_hat (J x q) of the normalised
// adjacency, plus the products U_hat*S_hat and V_hat*S_hat used by the
// SVD-view propagation.
class LowRankFactors {
public:
    LowRankFactors() = default;
    LowRankFactors(Matrix u, std::vector<double> s, Matrix v);

    std::size_t rank() const { return s_.size(); }
    std::size_t rows() const { return u_.rows(); }
    std::size_t cols() const { return v_.rows(); }

    const Matrix& u() const { return u_; }
    const std::vector<double>& s() const { return s_; }
    const Matrix& v() const { return v_; }
    const Matrix& us() const { return us_; }
    const Matrix& vs() const { return vs_; }

    // Header: magic, version, I, J, q (u64 LE); then U, S, V as row-major f64.
    void save(const std::filesystem::path& path) const;
    static LowRankFactors load(const std::filesystem::path& path);

private:
    Matrix u_;
    std::vector<double> s_;
    Matrix v_;
    Matrix us_;
    Matrix vs_;
};

// Randomised truncated SVD: Gaussian sketch, power iterations with
// re-orthonormalisation, QR, then an exact SVD of the small projected matrix.
// Deterministic for a given (a, cfg). When the sketch has fewer than `rank`
// independent columns the effective rank shrinks and a warning is issued.
LowRankFactors approx_svd(const SparseBipartite& a, const RsvdConfig& cfg);

// Largest I*J accepted by dense_reconstruct.
inline constexpr std::size_t kDenseReconstructMaxEntries = std::size_t{1} << 22;

// U_hat * diag(S_hat) * V_hat^T. Test-scale only.
Matrix dense_reconstruct(const LowRankFactors& f);

}  // namespace lightgcl
