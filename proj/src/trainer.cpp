// SPDX-License-Identifier: Apache-2.0
#include "lightgcl/trainer.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <string>

#include "lightgcl/binary_io.hpp"
#include "lightgcl/errors.hpp"
#include "lightgcl/eval.hpp"
#include "lightgcl/random.hpp"

namespace lightgcl {

namespace {

constexpr std::uint64_t kProgressMagic = binary::magic("LGCLRSM1");
constexpr std::uint64_t kProgressVersion = 1;

void require(bool ok, const std::string& message) {
    if (!ok) throw ConfigError(message);
}

bool is_rate(double r) { return r >= 0.0 && r < 1.0; }

}  // namespace

void TrainConfig::validate() const {
    require(dim >= 1, "d must be at least 1");
    require(batch_size >= 1, "batch_size must be at least 1");
    require(samples_per_user >= 1, "samples_per_user must be at least 1");
    require(epochs >= 1, "epochs must be at least 1");
    require(lambda1 >= 0.0 && std::isfinite(lambda1), "lambda1 must be a nonnegative number");
    require(lambda2 >= 0.0 && std::isfinite(lambda2), "lambda2 must be a nonnegative number");
    require(tau > 0.0 && std::isfinite(tau), "tau must be positive");
    require(is_rate(edge_dropout), "edge_dropout must lie in [0,1)");
    require(is_rate(node_dropout), "node_dropout must lie in [0,1)");
    require(learning_rate > 0.0 && std::isfinite(learning_rate), "learning rate must be positive");
}

TrainIndex::TrainIndex(const InteractionSet& train) : set_(&train), items_(train.items_by_user()) {
    for (std::size_t u = 0; u < items_.size(); ++u)
        if (!items_[u].empty()) active_users_.push_back(static_cast<UserId>(u));
}

bool TrainIndex::interacted(UserId u, ItemId i) const { return std::binary_search(items_[u].begin(), items_[u].end(), i); }

std::optional<ItemId> TrainIndex::sample_negative(UserId u, std::mt19937_64& rng, std::size_t* draws) const {
    const std::size_t items = set_->item_count;
    if (draws) *draws = 0;
    if (items_[u].size() >= items) return std::nullopt;
    std::uniform_int_distribution<std::size_t> pick(0, items - 1);
    while (true) {
        const auto j = static_cast<ItemId>(pick(rng));
        if (draws) ++*draws;
        if (!interacted(u, j)) return j;
    }
}

void InteractionSampler::start_epoch(std::mt19937_64& rng) {
    order_.resize(index_->set().size());
    std::iota(order_.begin(), order_.end(), 0);
    std::shuffle(order_.begin(), order_.end(), rng);
    cursor_ = 0;
}

std::size_t InteractionSampler::batches_per_epoch(std::size_t batch_size) const {
    return (index_->set().size() + batch_size - 1) / batch_size;
}

TrainBatch InteractionSampler::next(std::size_t batch_size, std::mt19937_64& rng) {
    TrainBatch batch;
    const std::size_t end = std::min(order_.size(), cursor_ + batch_size);
    batch.triples.reserve(end - cursor_);
    for (; cursor_ < end; ++cursor_) {
        const Interaction& p = index_->set().pairs[order_[cursor_]];
        const auto neg = index_->sample_negative(p.user, rng);
        if (!neg) {
            warn("user " + std::to_string(p.user) + " has interacted with every item; skipping triple");
            continue;
        }
        batch.triples.push_back({p.user, p.item, *neg});
    }
    batch.index_nodes();
    return batch;
}

TrainBatch sample_per_interaction(InteractionSampler& sampler, std::size_t batch_size, std::mt19937_64& rng) {
    return sampler.next(batch_size, rng);
}

TrainBatch sample_per_user(const TrainIndex& index, std::size_t batch_size, std::size_t samples_per_user, std::mt19937_64& rng) {
    if (samples_per_user == 0) throw ConfigError("samples_per_user must be at least 1");
    const auto& users = index.active_users();
    if (users.empty()) throw DataError("per-user sampling: no user has train interactions");
    TrainBatch batch;
    std::uniform_int_distribution<std::size_t> pick_user(0, users.size() - 1);
    for (std::size_t b = 0; b < batch_size; ++b) {
        const UserId u = users[pick_user(rng)];
        const auto items = index.items_of(u);
        std::vector<ItemId> positives;
        if (items.size() >= samples_per_user) {
            std::sample(items.begin(), items.end(), std::back_inserter(positives), samples_per_user, rng);
        } else {
            std::uniform_int_distribution<std::size_t> pick_item(0, items.size() - 1);
            for (std::size_t s = 0; s < samples_per_user; ++s) positives.push_back(items[pick_item(rng)]);
        }
        for (ItemId pos : positives) {
            const auto neg = index.sample_negative(u, rng);
            if (!neg) {
                warn("user " + std::to_string(u) + " has interacted with every item; skipping triple");
                continue;
            }
            batch.triples.push_back({u, pos, *neg});
        }
    }
    batch.index_nodes();
    return batch;
}

void node_dropout(TrainBatch& batch, double rate, std::mt19937_64& rng) {
    if (!is_rate(rate)) throw ConfigError("node dropout rate must lie in [0,1)");
    batch.cl_keep_users.assign(batch.batch_users.size(), 1);
    batch.cl_keep_items.assign(batch.batch_items.size(), 1);
    if (rate == 0.0) return;
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (auto& k : batch.cl_keep_users) k = uni(rng) >= rate ? 1 : 0;
    for (auto& k : batch.cl_keep_items) k = uni(rng) >= rate ? 1 : 0;
}

void adam_step(Matrix& table, const Matrix& grad, AdamMoments& moments, std::size_t t, const AdamConfig& cfg) {
    if (t == 0) throw ConfigError("adam_step: step counter starts at 1");
    if (grad.rows() != table.rows() || grad.cols() != table.cols()) throw ConfigError("adam_step: gradient shape mismatch");
    if (!all_finite(grad)) throw NumericalError("adam_step: non-finite gradient");
    if (moments.m.rows() != table.rows() || moments.m.cols() != table.cols()) {
        moments.m = Matrix(table.rows(), table.cols());
        moments.v = Matrix(table.rows(), table.cols());
    }
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
    double* x = table.data();
    double* m = moments.m.data();
    double* v = moments.v.data();
    const double* g = grad.data();
    for (std::size_t k = 0; k < table.size(); ++k) {
        m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * g[k];
        v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * g[k] * g[k];
        const double m_hat = m[k] / bc1;
        const double v_hat = v[k] / bc2;
        x[k] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    }
}

void propagate_for_eval(EmbeddingState& state, const SparseBipartite& a_norm) { propagate_local(state, a_norm); }

namespace {

void write_tables(binary::Writer& w, const Matrix& a, const Matrix& b) {
    w.array<double>(a.values());
    w.array<double>(b.values());
}

void read_table(binary::Reader& r, Matrix& m, std::size_t rows, std::size_t cols) {
    m = Matrix(rows, cols);
    m.values() = r.array<double>(rows * cols);
}

}  // namespace

void TrainProgress::save(const std::filesystem::path& path) const {
    binary::Writer w(path);
    w.u64(kProgressMagic);
    w.u64(kProgressVersion);
    w.u64(current.user_count());
    w.u64(current.item_count());
    w.u64(current.dim);
    w.u64(current.layers);
    w.u64(next_epoch);
    w.u64(adam_step);
    w.u64(best_epoch);
    w.u64(std::bit_cast<std::uint64_t>(best_recall));
    w.u64(epochs_without_improvement);
    w.u64(finished ? 1 : 0);
    write_tables(w, current.user0, current.item0);
    write_tables(w, adam_user.m, adam_user.v);
    write_tables(w, adam_item.m, adam_item.v);
    write_tables(w, best.user0, best.item0);
    w.close();
}

TrainProgress TrainProgress::load(const std::filesystem::path& path) {
    binary::Reader r(path);
    if (r.u64() != kProgressMagic) throw DataError(path.string() + ": not a training-progress file");
    if (const auto v = r.u64(); v != kProgressVersion) throw DataError(path.string() + ": unsupported version " + std::to_string(v));
    TrainProgress p;
    const std::size_t users = r.u64();
    const std::size_t items = r.u64();
    const std::size_t dim = r.u64();
    const std::size_t layers = r.u64();
    p.next_epoch = r.u64();
    p.adam_step = r.u64();
    p.best_epoch = r.u64();
    p.best_recall = std::bit_cast<double>(r.u64());
    p.epochs_without_improvement = r.u64();
    p.finished = r.u64() != 0;
    for (EmbeddingState* s : {&p.current, &p.best}) {
        s->dim = dim;
        s->layers = layers;
    }
    read_table(r, p.current.user0, users, dim);
    read_table(r, p.current.item0, items, dim);
    read_table(r, p.adam_user.m, users, dim);
    read_table(r, p.adam_user.v, users, dim);
    read_table(r, p.adam_item.m, items, dim);
    read_table(r, p.adam_item.v, items, dim);
    read_table(r, p.best.user0, users, dim);
    read_table(r, p.best.item0, items, dim);
    r.expect_end();
    return p;
}

TrainResult train(const TrainConfig& config, const InteractionSet& train_set, const SparseBipartite& a_norm,
                  const LowRankFactors& factors, const InteractionSet* validation, const TrainCallbacks& callbacks,
                  std::optional<TrainProgress> resume) {
    config.validate();
    if (train_set.empty()) throw DataError("train: no training interactions");
    if (a_norm.rows() != train_set.user_count || a_norm.cols() != train_set.item_count)
        throw ConfigError("train: adjacency shape does not match the training set");
    if (config.lambda1 != 0.0 && (factors.rows() != a_norm.rows() || factors.cols() != a_norm.cols()))
        throw ConfigError("train: SVD factors do not match the adjacency");
    const bool has_validation = validation != nullptr && !validation->empty();

    TrainProgress progress;
    if (resume) {
        progress = std::move(*resume);
        if (progress.current.user_count() != train_set.user_count || progress.current.item_count() != train_set.item_count ||
            progress.current.dim != config.dim || progress.current.layers != config.layers)
            throw ConfigError("train: resume state does not match the configuration");
    } else {
        progress.current = init_embeddings(train_set.user_count, train_set.item_count, config.dim, config.layers, config.seed);
        progress.best = progress.current;
    }

    const TrainIndex index(train_set);
    InteractionSampler sampler(index);
    const LossHyper hyper = config.loss_hyper();
    const AdamConfig adam{config.learning_rate};
    const double keep_prob = 1.0 - config.edge_dropout;
    EmbeddingState& state = progress.current;

    for (std::size_t epoch = progress.next_epoch; epoch < config.epochs && !progress.finished; ++epoch) {
        std::mt19937_64 rng(derive_seed(config.seed, {epoch, 1}));
        std::size_t batches = 0;
        if (config.sampler == SamplerKind::per_interaction) {
            sampler.start_epoch(rng);
            batches = sampler.batches_per_epoch(config.batch_size);
        } else {
            const std::size_t per_batch = config.batch_size * config.samples_per_user;
            batches = (train_set.size() + per_batch - 1) / per_batch;
        }

        for (std::size_t b = 0; b < batches; ++b) {
            TrainBatch batch = config.sampler == SamplerKind::per_interaction
                                   ? sample_per_interaction(sampler, config.batch_size, rng)
                                   : sample_per_user(index, config.batch_size, config.samples_per_user, rng);
            node_dropout(batch, config.node_dropout, rng);
            if (batch.triples.empty()) continue;

            const auto mask = EdgeDropoutMask::sample(a_norm.nnz(), keep_prob, derive_seed(config.seed, {epoch, b, 2}));
            const SparseBipartite dropped = apply_edge_dropout(a_norm, mask);
            propagate_local(state, dropped);
            if (hyper.lambda1 != 0.0) propagate_svd(state, factors);
            auto [loss, grad] = loss_and_grad(state, dropped, factors, batch, hyper);

            ++progress.adam_step;
            adam_step(state.user0, grad.user, progress.adam_user, progress.adam_step, adam);
            adam_step(state.item0, grad.item, progress.adam_item, progress.adam_step, adam);
            if (callbacks.on_batch) callbacks.on_batch({epoch, b, loss});
        }

        progress.next_epoch = epoch + 1;
        if (has_validation) {
            EmbeddingState probe = state;
            propagate_for_eval(probe, a_norm);
            const auto report = evaluate(probe, train_set, *validation, EvalOptions{{20}, std::nullopt});
            const MetricPair m = report.overall.at(20);
            if (callbacks.on_validation) callbacks.on_validation({epoch, m.recall, m.ndcg});
            if (m.recall > progress.best_recall) {
                progress.best_recall = m.recall;
                progress.best_epoch = epoch;
                progress.best.user0 = state.user0;
                progress.best.item0 = state.item0;
                progress.best.dim = state.dim;
                progress.best.layers = state.layers;
                progress.epochs_without_improvement = 0;
            } else if (++progress.epochs_without_improvement >= config.patience) {
                progress.finished = true;
            }
        } else {
            progress.best.user0 = state.user0;
            progress.best.item0 = state.item0;
            progress.best.dim = state.dim;
            progress.best.layers = state.layers;
            progress.best_epoch = epoch;
        }
        if (callbacks.on_epoch_end) callbacks.on_epoch_end(progress);
    }

    TrainResult result;
    result.early_stopped = progress.finished;
    result.epochs_run = progress.next_epoch;
    result.best_epoch = progress.best_epoch;
    result.best_recall = std::max(0.0, progress.best_recall);
    result.best = progress.best;
    propagate_for_eval(result.best, a_norm);
    return result;
}

}  // namespace lightgcl
