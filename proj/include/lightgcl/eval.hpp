// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lightgcl/data.hpp"
#include "lightgcl/matrix.hpp"
#include "lightgcl/model.hpp"

namespace lightgcl {

// |topn ∩ test| / |test|. `test` must be sorted.
double recall_at_n(std::span<const ItemId> topn, std::span<const ItemId> test);

// DCG of the hits in `topn` over the ideal DCG of min(n, |test|) hits.
// n defaults to topn.size(). `test` must be sorted.
double ndcg_at_n(std::span<const ItemId> topn, std::span<const ItemId> test, std::optional<std::size_t> n = std::nullopt);

// Recall counting only recommended items whose group is `group`; the
// denominator stays |test|.
double decomposed_recall(std::span<const ItemId> topn, std::span<const ItemId> test, std::span<const std::size_t> group_of_item,
                         std::size_t group);

// Top-n item ids by descending score, ties by ascending id, skipping the
// sorted `excluded` ids.
std::vector<ItemId> top_n(std::span<const double> scores, std::span<const ItemId> excluded, std::size_t n);

struct MetricPair {
    double recall = 0.0;
    double ndcg = 0.0;
};

struct GroupMetrics {
    std::size_t users = 0;
    MetricPair metrics;
};

struct MetricsReport {
    std::vector<std::size_t> ns;
    std::size_t users_evaluated = 0;
    std::map<std::size_t, MetricPair> overall;

    // Present when evaluated with degree-group boundaries.
    std::vector<std::size_t> group_boundaries;
    // Per N: decomposed recall for each item-popularity group.
    std::map<std::size_t, std::vector<double>> decomposed_recall;
    // Per N: metrics restricted to users of each degree group.
    std::map<std::size_t, std::vector<GroupMetrics>> user_groups;

    std::optional<double> mad;

    std::string to_json() const;
    std::string to_tsv() const;
};

using ScoreFunction = std::function<std::vector<double>(std::size_t user)>;

struct EvalOptions {
    std::vector<std::size_t> ns{20, 40};
    // Degree-group boundaries; grouping is by degree in `exclude`.
    std::optional<std::vector<std::size_t>> group_boundaries;
};

// Full-ranking evaluation: for every user with at least one `test` item, rank
// all items not in that user's `exclude` items. Averages are over evaluated
// users in ascending id order.
MetricsReport evaluate_scores(const ScoreFunction& scores, const InteractionSet& exclude, const InteractionSet& test,
                              const EvalOptions& options);

// evaluate_scores with the dot-product scores of the final embeddings.
MetricsReport evaluate(const EmbeddingState& state, const InteractionSet& exclude, const InteractionSet& test,
                       const EvalOptions& options);

// Mean over sampled rows of the mean cosine distance to the other sampled
// rows. Rows are sampled without replacement when n > sample.
double mad(const Matrix& embeddings, std::size_t sample = 2000, std::uint64_t seed = 0);

}  // namespace lightgcl
