// SPDX-License-Identifier: Apache-2.0
#include "lightgcl/svd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "lightgcl/binary_io.hpp"
#include "lightgcl/errors.hpp"

namespace lightgcl {

namespace {

constexpr std::uint64_t kFactorsMagic = binary::magic("LGCLSVD1");
constexpr std::uint64_t kFactorsVersion = 1;
constexpr int kMaxJacobiSweeps = 80;

// Hestenes one-sided Jacobi for m >= n. Columns of `a` are orthogonalised in
// place by plane rotations accumulated into V.
SvdResult jacobi_tall(const Matrix& a) {
    const std::size_t m = a.rows();
    const std::size_t n = a.cols();
    Matrix w = a.transposed();        // row j = column j of A
    Matrix vt = Matrix::identity(n);  // row j = column j of V

    for (int sweep = 0; sweep < kMaxJacobiSweeps; ++sweep) {
        bool rotated = false;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                auto wp = w.row(p);
                auto wq = w.row(q);
                const double alpha = dot(wp, wp);
                const double beta = dot(wq, wq);
                const double gamma = dot(wp, wq);
                if (alpha == 0.0 || beta == 0.0) continue;
                if (std::abs(gamma) <= 1e-15 * std::sqrt(alpha * beta)) continue;
                rotated = true;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (std::size_t i = 0; i < m; ++i) {
                    const double x = wp[i];
                    const double y = wq[i];
                    wp[i] = c * x - s * y;
                    wq[i] = s * x + c * y;
                }
                auto vp = vt.row(p);
                auto vq = vt.row(q);
                for (std::size_t i = 0; i < n; ++i) {
                    const double x = vp[i];
                    const double y = vq[i];
                    vp[i] = c * x - s * y;
                    vq[i] = s * x + c * y;
                }
            }
        }
        if (!rotated) break;
    }

    std::vector<double> sigma(n);
    for (std::size_t j = 0; j < n; ++j) sigma[j] = norm(w.row(j));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return sigma[x] > sigma[y]; });

    SvdResult r{Matrix(m, n), std::vector<double>(n), Matrix(n, n)};
    const double smax = n > 0 ? sigma[order[0]] : 0.0;
    const double tiny = std::max(smax * 1e-13, std::numeric_limits<double>::min());

    std::vector<std::vector<double>> ucols;
    std::vector<std::size_t> missing;
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t j = order[k];
        r.s[k] = sigma[j];
        for (std::size_t i = 0; i < n; ++i) r.v(i, k) = vt(j, i);
        if (sigma[j] > tiny) {
            std::vector<double> col(m);
            for (std::size_t i = 0; i < m; ++i) col[i] = w(j, i) / sigma[j];
            ucols.push_back(std::move(col));
        } else {
            ucols.emplace_back();
            missing.push_back(k);
        }
    }
    // Complete U for null singular values from the standard basis.
    std::size_t e = 0;
    for (std::size_t k : missing) {
        for (; e < m; ++e) {
            std::vector<double> v(m, 0.0);
            v[e] = 1.0;
            for (int pass = 0; pass < 2; ++pass)
                for (const auto& c : ucols)
                    if (!c.empty()) {
                        const double proj = dot(c, v);
                        for (std::size_t i = 0; i < m; ++i) v[i] -= proj * c[i];
                    }
            const double nv = norm(v);
            if (nv > 1e-8) {
                for (double& x : v) x /= nv;
                ucols[k] = std::move(v);
                ++e;
                break;
            }
        }
    }
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < m; ++i) r.u(i, k) = ucols[k][i];
    return r;
}

void check_factors(const Matrix& u, const std::vector<double>& s, const Matrix& v) {
    if (u.cols() != s.size() || v.cols() != s.size()) throw ConfigError("low-rank factors: rank mismatch between U, S and V");
    for (std::size_t k = 0; k < s.size(); ++k) {
        if (!(s[k] >= 0.0)) throw NumericalError("low-rank factors: negative or NaN singular value");
        if (k > 0 && s[k] > s[k - 1]) throw NumericalError("low-rank factors: singular values not descending");
    }
}

}  // namespace

SvdResult exact_svd(const Matrix& a) {
    if (std::min(a.rows(), a.cols()) > kExactSvdMaxDim)
        throw ConfigError("exact_svd is a test oracle; min dimension " + std::to_string(std::min(a.rows(), a.cols())) +
                          " exceeds " + std::to_string(kExactSvdMaxDim));
    if (a.rows() >= a.cols()) return jacobi_tall(a);
    SvdResult t = jacobi_tall(a.transposed());
    return SvdResult{std::move(t.v), std::move(t.s), std::move(t.u)};
}

LowRankFactors::LowRankFactors(Matrix u, std::vector<double> s, Matrix v)
    : u_(std::move(u)), s_(std::move(s)), v_(std::move(v)) {
    check_factors(u_, s_, v_);
    us_ = u_;
    vs_ = v_;
    for (std::size_t r = 0; r < us_.rows(); ++r)
        for (std::size_t k = 0; k < s_.size(); ++k) us_(r, k) *= s_[k];
    for (std::size_t r = 0; r < vs_.rows(); ++r)
        for (std::size_t k = 0; k < s_.size(); ++k) vs_(r, k) *= s_[k];
}

void LowRankFactors::save(const std::filesystem::path& path) const {
    binary::Writer w(path);
    w.u64(kFactorsMagic);
    w.u64(kFactorsVersion);
    w.u64(rows());
    w.u64(cols());
    w.u64(rank());
    w.array<double>(u_.values());
    w.array<double>(s_);
    w.array<double>(v_.values());
    w.close();
}

LowRankFactors LowRankFactors::load(const std::filesystem::path& path) {
    binary::Reader r(path);
    if (r.u64() != kFactorsMagic) throw DataError(path.string() + ": not a factors file");
    if (const auto v = r.u64(); v != kFactorsVersion) throw DataError(path.string() + ": unsupported version " + std::to_string(v));
    const std::size_t rows = r.u64();
    const std::size_t cols = r.u64();
    const std::size_t q = r.u64();
    Matrix u(rows, q);
    u.values() = r.array<double>(rows * q);
    auto s = r.array<double>(q);
    Matrix v(cols, q);
    v.values() = r.array<double>(cols * q);
    r.expect_end();
    return LowRankFactors(std::move(u), std::move(s), std::move(v));
}

LowRankFactors approx_svd(const SparseBipartite& a, const RsvdConfig& cfg) {
    const std::size_t min_dim = std::min(a.rows(), a.cols());
    if (cfg.rank == 0) throw ConfigError("SVD rank q must be at least 1");
    if (cfg.rank > min_dim)
        throw ConfigError("SVD rank q=" + std::to_string(cfg.rank) + " exceeds min(I,J)=" + std::to_string(min_dim));
    if (a.nnz() == 0) throw ConfigError("approx_svd: matrix has no stored entries");

    const std::size_t sketch = std::min(cfg.rank + cfg.effective_oversample(), min_dim);

    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Matrix omega(a.cols(), sketch);
    for (double& x : omega.values()) x = gauss(rng);

    Matrix q = orthonormalize_columns(a.multiply(omega));
    for (std::size_t it = 0; it < cfg.power_iters && q.cols() > 0; ++it) {
        const Matrix z = orthonormalize_columns(a.multiply_transpose(q));
        q = orthonormalize_columns(a.multiply(z));
    }
    if (q.cols() == 0) throw NumericalError("approx_svd: sketch of the matrix is numerically zero");

    // B = Q^T A, formed through its transpose A^T Q (J x r).
    const Matrix b = a.multiply_transpose(q).transposed();
    SvdResult small = exact_svd(b);

    std::size_t rank = std::min(cfg.rank, small.s.size());
    if (rank < cfg.rank)
        warn("approx_svd: sketch spans only " + std::to_string(q.cols()) + " independent directions; rank reduced from " +
             std::to_string(cfg.rank) + " to " + std::to_string(rank));

    Matrix u_hat = matmul(q, small.u.column_block(0, rank));
    Matrix v_hat = small.v.column_block(0, rank);
    std::vector<double> s_hat(small.s.begin(), small.s.begin() + static_cast<std::ptrdiff_t>(rank));
    return LowRankFactors(std::move(u_hat), std::move(s_hat), std::move(v_hat));
}

Matrix dense_reconstruct(const LowRankFactors& f) {
    if (f.rows() * f.cols() > kDenseReconstructMaxEntries)
        throw ConfigError("dense_reconstruct is test-scale only; " + std::to_string(f.rows()) + "x" + std::to_string(f.cols()) +
                          " is too large");
    return matmul(f.us(), f.v().transposed());
}

}  // namespace lightgcl
