// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "lightgcl/data.hpp"
#include "lightgcl/matrix.hpp"
#include "lightgcl/model.hpp"
#include "lightgcl/sparse.hpp"
#include "lightgcl/svd.hpp"

namespace lightgcl {

struct Triple {
    UserId user;
    ItemId pos;
    ItemId neg;
};

// One optimisation step's worth of samples. batch_users/batch_items are the
// distinct nodes touched by the triples (ascending); the cl_keep_* bitsets are
// aligned with them and select the contrastive anchors after node dropout.
struct TrainBatch {
    std::vector<Triple> triples;
    std::vector<UserId> batch_users;
    std::vector<ItemId> batch_items;
    std::vector<std::uint8_t> cl_keep_users;
    std::vector<std::uint8_t> cl_keep_items;

    // Fills batch_users/batch_items from the triples and keeps every node.
    void index_nodes();
    std::vector<UserId> kept_users() const;
    std::vector<ItemId> kept_items() const;
};

struct LossHyper {
    double lambda1 = 1e-7;
    double lambda2 = 1e-5;
    double tau = 0.5;
    bool cl_skip_layer0 = false;
};

struct LossBreakdown {
    double total = 0.0;
    double ranking = 0.0;
    double cl_user = 0.0;
    double cl_item = 0.0;
    double reg = 0.0;
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    double tau = 0.0;
};

// Gradients with respect to the layer-0 tables.
struct GradientSet {
    Matrix user;
    Matrix item;
};

// sum_k max(0, 1 - pos_k + neg_k)
double ranking_loss(std::span<const double> scores_pos, std::span<const double> scores_neg);

// Layer-wise InfoNCE between main-view z and SVD-view g embeddings. For each
// kept node i and layer l >= first_layer:
//   -log( exp(cos(z_il, g_il)/tau) / sum_{i' kept} exp(cos(z_il, g_i'l)/tau) ).
// batch_nodes and cl_mask are aligned. Zero rows, and rows below 1e-10 of the
// layer's largest row norm, have cosine 0.
double infonce(std::span<const Matrix> z_layers, std::span<const Matrix> g_layers, std::span<const std::uint32_t> batch_nodes,
               std::span<const std::uint8_t> cl_mask, double tau, std::size_t first_layer = 0);

// Squared Frobenius norm of the E0 rows touched by the batch.
double l2_reg(const EmbeddingState& state, std::span<const UserId> batch_users, std::span<const ItemId> batch_items);

// Joint loss and its gradient with respect to E0. `state` must hold the
// forward pass for `propagation_adj` (the edge-dropped adjacency) and `factors`.
std::pair<LossBreakdown, GradientSet> loss_and_grad(const EmbeddingState& state, const SparseBipartite& propagation_adj,
                                                    const LowRankFactors& factors, const TrainBatch& batch, const LossHyper& hyper);

// Forward pass on a copy of `state` followed by the loss, no gradient.
LossBreakdown batch_loss(EmbeddingState state, const SparseBipartite& propagation_adj, const LowRankFactors& factors,
                         const TrainBatch& batch, const LossHyper& hyper);

struct FiniteDiffReport {
    std::size_t coordinates = 0;
    double max_rel_error = 0.0;
    double max_abs_error = 0.0;
    bool passed = false;
};

struct FiniteDiffOptions {
    double tolerance = 1e-4;
    std::size_t coordinates = 200;
    double epsilon = 3e-4;
    // Relative error is |a - n| / max(|a|, |n|, abs_floor).
    double abs_floor = 1e-6;
    std::uint64_t seed = 0;
};

using LossFunction = std::function<double(const EmbeddingState&)>;

// Five-point central differences of `loss` on a random subset of E0 coordinates compared
// with `analytic`. Single-threaded by contract: the caller sets THREADS=1.
FiniteDiffReport finite_diff_check(const EmbeddingState& state, const GradientSet& analytic, const LossFunction& loss,
                                   const FiniteDiffOptions& options = {});

}  // namespace lightgcl
