// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "lightgcl/matrix.hpp"
#include "lightgcl/sparse.hpp"
#include "lightgcl/svd.hpp"

namespace lightgcl {

// Trainable layer-0 tables plus the per-layer embeddings of both views.
//
// After propagate_local: z_*[0] == E0, z_*[l] for l = 1..layers, and the
// layer-sum readout e_*. After propagate_svd: g_*[0] == E0 and g_*[l] for
// l >= 1, each computed from the main-view layer l-1.
struct EmbeddingState {
    std::size_t dim = 0;
    std::size_t layers = 0;
    Matrix user0;
    Matrix item0;

    std::vector<Matrix> z_user;
    std::vector<Matrix> z_item;
    std::vector<Matrix> g_user;
    std::vector<Matrix> g_item;
    Matrix e_user;
    Matrix e_item;

    std::size_t user_count() const { return user0.rows(); }
    std::size_t item_count() const { return item0.rows(); }
};

// Uniform(-sqrt(6/(2d)), +sqrt(6/(2d))) tables, users first then items.
EmbeddingState init_embeddings(std::size_t users, std::size_t items, std::size_t dim, std::size_t layers, std::uint64_t seed);

// Bernoulli(keep_prob) selection over the stored entries of the adjacency (CSR order).
struct EdgeDropoutMask {
    double keep_prob = 1.0;
    std::vector<std::uint8_t> kept;

    static EdgeDropoutMask keep_all(std::size_t nnz);
    static EdgeDropoutMask sample(std::size_t nnz, double keep_prob, std::uint64_t seed);
    std::size_t kept_count() const;
};

// p(A): dropped entries become 0, kept entries are divided by keep_prob.
SparseBipartite apply_edge_dropout(const SparseBipartite& a_norm, const EdgeDropoutMask& mask);

// Main view over an already-dropped adjacency:
//   z_user[l] = A z_item[l-1],  z_item[l] = A^T z_user[l-1],  e = sum_l z[l].
void propagate_local(EmbeddingState& state, const SparseBipartite& propagation_adj);
void propagate_local(EmbeddingState& state, const SparseBipartite& a_norm, const EdgeDropoutMask& mask);

// SVD view in factored form:
//   g_user[l] = (U S) (V^T z_item[l-1]),  g_item[l] = (V S) (U^T z_user[l-1]).
// Requires propagate_local to have run on this state.
void propagate_svd(EmbeddingState& state, const LowRankFactors& factors);

double score(const EmbeddingState& state, std::size_t user, std::size_t item);
std::vector<double> score_all(const EmbeddingState& state, std::size_t user);

// Checkpoint: magic, version, I, J, d, L (u64 LE), then E0_user and E0_item
// as row-major f32. Propagated layers are not stored.
void save_checkpoint(const std::filesystem::path& path, const EmbeddingState& state);
EmbeddingState load_checkpoint(const std::filesystem::path& path);

// Rounds the trainable tables through f32, matching what a checkpoint stores.
void round_to_checkpoint_precision(EmbeddingState& state);

}  // namespace lightgcl
