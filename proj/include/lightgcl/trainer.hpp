// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "lightgcl/data.hpp"
#include "lightgcl/model.hpp"
#include "lightgcl/objective.hpp"
#include "lightgcl/sparse.hpp"
#include "lightgcl/svd.hpp"

namespace lightgcl {

enum class SamplerKind { per_interaction, per_user };

struct TrainConfig {
    std::size_t dim = 32;
    std::size_t layers = 2;
    std::size_t batch_size = 256;
    double lambda1 = 1e-7;
    double lambda2 = 1e-5;
    double tau = 0.5;
    double edge_dropout = 0.25;
    double node_dropout = 0.25;
    bool cl_skip_layer0 = false;
    SamplerKind sampler = SamplerKind::per_interaction;
    // S, positives (and negatives) per sampled user in the per-user setting.
    std::size_t samples_per_user = 1;
    std::size_t epochs = 100;
    double learning_rate = 1e-3;
    std::size_t patience = 10;
    std::uint64_t seed = 2024;

    // Throws ConfigError on out-of-range values.
    void validate() const;
    LossHyper loss_hyper() const { return {lambda1, lambda2, tau, cl_skip_layer0}; }
};

// Per-user sorted item lists for membership tests during negative sampling.
class TrainIndex {
public:
    explicit TrainIndex(const InteractionSet& train);

    const InteractionSet& set() const { return *set_; }
    std::span<const ItemId> items_of(UserId u) const { return items_[u]; }
    bool interacted(UserId u, ItemId i) const;
    const std::vector<UserId>& active_users() const { return active_users_; }

    // Uniform rejection sampling over items the user has not interacted with.
    // Returns nullopt when the user has interacted with every item. `draws`
    // receives the number of uniform draws made.
    std::optional<ItemId> sample_negative(UserId u, std::mt19937_64& rng, std::size_t* draws = nullptr) const;

private:
    const InteractionSet* set_;
    std::vector<std::vector<ItemId>> items_;
    std::vector<UserId> active_users_;
};

// Walks one epoch-level permutation of the train interactions.
class InteractionSampler {
public:
    explicit InteractionSampler(const TrainIndex& index) : index_(&index) {}

    void start_epoch(std::mt19937_64& rng);
    bool exhausted() const { return cursor_ >= order_.size(); }
    std::size_t batches_per_epoch(std::size_t batch_size) const;

    // Next up to batch_size interactions of the permutation, each with one
    // negative. Triples whose user has no negative candidate are skipped.
    TrainBatch next(std::size_t batch_size, std::mt19937_64& rng);

private:
    const TrainIndex* index_;
    std::vector<std::size_t> order_;
    std::size_t cursor_ = 0;
};

TrainBatch sample_per_interaction(InteractionSampler& sampler, std::size_t batch_size, std::mt19937_64& rng);

// batch_size users drawn uniformly with replacement from users with train
// interactions; each gets S positives (without replacement when deg >= S)
// and S negatives.
TrainBatch sample_per_user(const TrainIndex& index, std::size_t batch_size, std::size_t samples_per_user, std::mt19937_64& rng);

// Keeps each batch node for the contrastive loss with probability 1 - rate.
void node_dropout(TrainBatch& batch, double rate, std::mt19937_64& rng);

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct AdamMoments {
    Matrix m;
    Matrix v;
};

// Bias-corrected Adam update of `table` at step t >= 1.
void adam_step(Matrix& table, const Matrix& grad, AdamMoments& moments, std::size_t t, const AdamConfig& cfg);

struct BatchLogRow {
    std::size_t epoch;
    std::size_t batch;
    LossBreakdown loss;
};

struct ValidationRow {
    std::size_t epoch;
    double recall20;
    double ndcg20;
};

// Everything needed to continue a run at `next_epoch`.
struct TrainProgress {
    std::size_t next_epoch = 0;
    std::size_t adam_step = 0;
    EmbeddingState current;
    AdamMoments adam_user;
    AdamMoments adam_item;
    EmbeddingState best;
    std::size_t best_epoch = 0;
    double best_recall = -1.0;
    std::size_t epochs_without_improvement = 0;
    bool finished = false;  // early stopping fired

    void save(const std::filesystem::path& path) const;
    static TrainProgress load(const std::filesystem::path& path);
};

struct TrainCallbacks {
    std::function<void(const BatchLogRow&)> on_batch;
    std::function<void(const ValidationRow&)> on_validation;
    std::function<void(const TrainProgress&)> on_epoch_end;
};

struct TrainResult {
    // Best-validation tables (last epoch when there is no validation set),
    // with final embeddings propagated without edge dropout.
    EmbeddingState best;
    std::size_t best_epoch = 0;
    double best_recall = 0.0;
    std::size_t epochs_run = 0;
    bool early_stopped = false;
};

// Runs the optimisation loop. `validation` drives early stopping on
// Recall@20; pass nullptr to train for exactly config.epochs epochs.
TrainResult train(const TrainConfig& config, const InteractionSet& train_set, const SparseBipartite& a_norm,
                  const LowRankFactors& factors, const InteractionSet* validation, const TrainCallbacks& callbacks = {},
                  std::optional<TrainProgress> resume = std::nullopt);

// Main-view forward pass with every edge kept, as used for evaluation.
void propagate_for_eval(EmbeddingState& state, const SparseBipartite& a_norm);

}  // namespace lightgcl
