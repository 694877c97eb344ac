// SPDX-License-Identifier: Apache-2.0
#include "lightgcl/model.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "lightgcl/binary_io.hpp"
#include "lightgcl/errors.hpp"

namespace lightgcl {

namespace {

constexpr std::uint64_t kCheckpointMagic = binary::magic("LGCLCKP1");
constexpr std::uint64_t kCheckpointVersion = 1;

void require_dims(const EmbeddingState& state, std::size_t rows, std::size_t cols, const char* what) {
    if (state.user_count() != rows || state.item_count() != cols)
        throw ConfigError(std::string(what) + ": embeddings are " + std::to_string(state.user_count()) + "x" +
                          std::to_string(state.item_count()) + " but the operator is " + std::to_string(rows) + "x" +
                          std::to_string(cols));
}

}  // namespace

EmbeddingState init_embeddings(std::size_t users, std::size_t items, std::size_t dim, std::size_t layers, std::uint64_t seed) {
    if (dim == 0) throw ConfigError("embedding size d must be at least 1");
    EmbeddingState s;
    s.dim = dim;
    s.layers = layers;
    s.user0 = Matrix(users, dim);
    s.item0 = Matrix(items, dim);
    const double bound = std::sqrt(6.0 / (2.0 * static_cast<double>(dim)));
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-bound, bound);
    for (double& x : s.user0.values()) x = uni(rng);
    for (double& x : s.item0.values()) x = uni(rng);
    return s;
}

EdgeDropoutMask EdgeDropoutMask::keep_all(std::size_t nnz) { return EdgeDropoutMask{1.0, std::vector<std::uint8_t>(nnz, 1)}; }

EdgeDropoutMask EdgeDropoutMask::sample(std::size_t nnz, double keep_prob, std::uint64_t seed) {
    if (!(keep_prob > 0.0 && keep_prob <= 1.0)) throw ConfigError("edge keep probability must lie in (0,1]");
    if (keep_prob == 1.0) return keep_all(nnz);
    EdgeDropoutMask m{keep_prob, std::vector<std::uint8_t>(nnz, 0)};
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (auto& k : m.kept) k = uni(rng) < keep_prob ? 1 : 0;
    return m;
}

std::size_t EdgeDropoutMask::kept_count() const {
    std::size_t n = 0;
    for (auto k : kept) n += k;
    return n;
}

SparseBipartite apply_edge_dropout(const SparseBipartite& a_norm, const EdgeDropoutMask& mask) {
    if (mask.kept.size() != a_norm.nnz())
        throw ConfigError("edge mask covers " + std::to_string(mask.kept.size()) + " entries, adjacency has " + std::to_string(a_norm.nnz()));
    if (mask.keep_prob == 1.0 && mask.kept_count() == a_norm.nnz()) return a_norm;
    std::vector<double> vals = a_norm.values();
    const double inv = 1.0 / mask.keep_prob;
    for (std::size_t k = 0; k < vals.size(); ++k) vals[k] = mask.kept[k] ? vals[k] * inv : 0.0;
    return a_norm.with_values(std::move(vals));
}

void propagate_local(EmbeddingState& state, const SparseBipartite& propagation_adj) {
    require_dims(state, propagation_adj.rows(), propagation_adj.cols(), "propagate_local");
    state.z_user.assign(1, state.user0);
    state.z_item.assign(1, state.item0);
    for (std::size_t l = 1; l <= state.layers; ++l) {
        state.z_user.push_back(propagation_adj.multiply(state.z_item[l - 1]));
        state.z_item.push_back(propagation_adj.multiply_transpose(state.z_user[l - 1]));
    }
    state.e_user = state.z_user[0];
    state.e_item = state.z_item[0];
    for (std::size_t l = 1; l <= state.layers; ++l) {
        add_scaled(state.e_user, state.z_user[l]);
        add_scaled(state.e_item, state.z_item[l]);
    }
}

void propagate_local(EmbeddingState& state, const SparseBipartite& a_norm, const EdgeDropoutMask& mask) {
    propagate_local(state, apply_edge_dropout(a_norm, mask));
}

void propagate_svd(EmbeddingState& state, const LowRankFactors& factors) {
    require_dims(state, factors.rows(), factors.cols(), "propagate_svd");
    if (state.z_user.size() != state.layers + 1 || state.z_item.size() != state.layers + 1)
        throw ConfigError("propagate_svd: main-view layers must be computed first");
    state.g_user.assign(1, state.user0);
    state.g_item.assign(1, state.item0);
    for (std::size_t l = 1; l <= state.layers; ++l) {
        state.g_user.push_back(matmul(factors.us(), matmul_tn(factors.v(), state.z_item[l - 1])));
        state.g_item.push_back(matmul(factors.vs(), matmul_tn(factors.u(), state.z_user[l - 1])));
    }
}

double score(const EmbeddingState& state, std::size_t user, std::size_t item) {
    if (user >= state.e_user.rows() || item >= state.e_item.rows())
        throw std::out_of_range("score: (" + std::to_string(user) + "," + std::to_string(item) + ") out of range");
    return dot(state.e_user.row(user), state.e_item.row(item));
}

std::vector<double> score_all(const EmbeddingState& state, std::size_t user) {
    if (user >= state.e_user.rows()) throw std::out_of_range("score_all: user " + std::to_string(user) + " out of range");
    const auto u = state.e_user.row(user);
    std::vector<double> out(state.e_item.rows());
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = dot(u, state.e_item.row(j));
    return out;
}

void save_checkpoint(const std::filesystem::path& path, const EmbeddingState& state) {
    binary::Writer w(path);
    w.u64(kCheckpointMagic);
    w.u64(kCheckpointVersion);
    w.u64(state.user_count());
    w.u64(state.item_count());
    w.u64(state.dim);
    w.u64(state.layers);
    for (const Matrix* table : {&state.user0, &state.item0}) {
        std::vector<float> f(table->values().begin(), table->values().end());
        w.array<float>(f);
    }
    w.close();
}

EmbeddingState load_checkpoint(const std::filesystem::path& path) {
    binary::Reader r(path);
    if (r.u64() != kCheckpointMagic) throw DataError(path.string() + ": not a checkpoint");
    if (const auto v = r.u64(); v != kCheckpointVersion) throw DataError(path.string() + ": unsupported version " + std::to_string(v));
    EmbeddingState s;
    const std::size_t users = r.u64();
    const std::size_t items = r.u64();
    s.dim = r.u64();
    s.layers = r.u64();
    s.user0 = Matrix(users, s.dim);
    s.item0 = Matrix(items, s.dim);
    for (Matrix* table : {&s.user0, &s.item0}) {
        const auto f = r.array<float>(table->size());
        std::copy(f.begin(), f.end(), table->values().begin());
    }
    r.expect_end();
    return s;
}

void round_to_checkpoint_precision(EmbeddingState& state) {
    for (Matrix* table : {&state.user0, &state.item0})
        for (double& x : table->values()) x = static_cast<double>(static_cast<float>(x));
}

}  // namespace lightgcl
