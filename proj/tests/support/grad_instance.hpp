// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <random>

#include "lightgcl/data.hpp"
#include "lightgcl/model.hpp"
#include "lightgcl/objective.hpp"
#include "lightgcl/svd.hpp"
#include "support/fixtures.hpp"

namespace lightgcl::testing {

// A forward-propagated training batch on a small random graph.
struct GradInstance {
    SparseBipartite adj;
    SparseBipartite dropped;
    LowRankFactors factors;
    EmbeddingState state;
    TrainBatch batch;
    LossHyper hyper;

    LossFunction loss() const {
        return [this](const EmbeddingState& s) { return batch_loss(s, dropped, factors, batch, hyper).total; };
    }
};

// Margins within `kink_gap` of the hinge are rejected so that central
// differences never straddle it.
inline bool near_kink(const GradInstance& in, double kink_gap) {
    for (const auto& t : in.batch.triples) {
        const double margin = 1.0 - score(in.state, t.user, t.pos) + score(in.state, t.user, t.neg);
        if (std::abs(margin) < kink_gap) return true;
    }
    return false;
}

inline GradInstance make_grad_instance(std::uint64_t seed, const LossHyper& hyper, double kink_gap = 0.05) {
    for (std::uint64_t attempt = 0;; ++attempt) {
        std::mt19937_64 rng(seed * 1000003 + attempt);
        const std::size_t users = 3 + rng() % 6;
        const std::size_t items = 3 + rng() % 6;
        const auto set = random_interactions(users, items, 0.35, rng);
        const std::size_t dim = 2 + rng() % 5;
        const std::size_t layers = 1 + rng() % 3;
        const std::size_t q = 1 + rng() % std::min<std::size_t>({users, items, 4});

        GradInstance in{normalize(set), {}, {}, init_embeddings(users, items, dim, layers, rng()), {}, hyper};
        in.factors = approx_svd(in.adj, RsvdConfig{q, std::nullopt, 2, rng()});
        in.dropped = apply_edge_dropout(in.adj, EdgeDropoutMask::sample(in.adj.nnz(), 0.75, rng()));
        const double scale = std::uniform_real_distribution<double>(0.5, 4.0)(rng);
        in.state.user0 = scaled(in.state.user0, scale);
        in.state.item0 = scaled(in.state.item0, scale);

        const auto by_user = set.items_by_user();
        std::uniform_int_distribution<std::size_t> pick_user(0, users - 1);
        const std::size_t triples = 2 + rng() % 6;
        while (in.batch.triples.size() < triples) {
            const auto u = pick_user(rng);
            const auto& pos = by_user[u];
            if (pos.empty() || pos.size() == items) continue;
            const ItemId p = pos[rng() % pos.size()];
            ItemId n;
            do n = ItemId(rng() % items);
            while (std::binary_search(pos.begin(), pos.end(), n));
            in.batch.triples.push_back({UserId(u), p, n});
        }
        in.batch.index_nodes();
        for (auto& k : in.batch.cl_keep_users) k = rng() % 4 != 0;
        for (auto& k : in.batch.cl_keep_items) k = rng() % 4 != 0;

        propagate_local(in.state, in.dropped);
        propagate_svd(in.state, in.factors);
        if (!near_kink(in, kink_gap)) return in;
    }
}

// Item 2 shares no edge with the anchor users 0 and 1 and, with one layer,
// lies outside the ranking loss's receptive field; only the SVD view links
// them. Rank 2 keeps the SVD-view rows from all pointing one way, which would
// make the in-batch softmax constant.
struct SvdNeighbourProbe {
    double observed_edge = 0.0;   // Ã[0, 2]
    double svd_edge = 0.0;        // Â_SVD[0, 2]
    double contrastive_norm = 0.0;
    double ranking_norm = 0.0;
};

inline SvdNeighbourProbe svd_neighbour_probe() {
    const auto adj = normalize(InteractionSet::make(3, 3, {{0, 0}, {1, 0}, {1, 1}, {2, 1}, {2, 2}}));
    const auto factors = approx_svd(adj, RsvdConfig{2, std::nullopt, 2, 0});
    auto state = init_embeddings(3, 3, 4, 1, 21);
    propagate_local(state, adj);
    propagate_svd(state, factors);
    TrainBatch batch;
    batch.triples = {{0, 0, 1}, {1, 1, 0}};
    batch.index_nodes();
    batch.cl_keep_items.assign(batch.cl_keep_items.size(), 0);
    auto row_norm = [](const GradientSet& g) { return norm(g.item.row(2)); };
    SvdNeighbourProbe probe;
    probe.observed_edge = adj.at(0, 2);
    probe.svd_edge = dense_reconstruct(factors)(0, 2);
    probe.contrastive_norm = row_norm(loss_and_grad(state, adj, factors, batch, {1.0, 0.0, 0.5, false}).second);
    probe.ranking_norm = row_norm(loss_and_grad(state, adj, factors, batch, {0.0, 0.0, 0.5, false}).second);
    return probe;
}

}  // namespace lightgcl::testing
