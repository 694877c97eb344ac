// SPDX-License-Identifier: Apache-2.0
#include "lightgcl/eval.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "lightgcl/errors.hpp"

namespace lightgcl {

namespace {

bool contains(std::span<const ItemId> sorted, ItemId item) { return std::binary_search(sorted.begin(), sorted.end(), item); }

double discount(std::size_t rank_one_based) { return 1.0 / std::log2(static_cast<double>(rank_one_based) + 1.0); }

}  // namespace

double recall_at_n(std::span<const ItemId> topn, std::span<const ItemId> test) {
    if (test.empty()) return 0.0;
    std::size_t hits = 0;
    for (ItemId i : topn) hits += contains(test, i) ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(test.size());
}

double ndcg_at_n(std::span<const ItemId> topn, std::span<const ItemId> test, std::optional<std::size_t> n) {
    if (test.empty()) return 0.0;
    double dcg = 0.0;
    for (std::size_t r = 0; r < topn.size(); ++r)
        if (contains(test, topn[r])) dcg += discount(r + 1);
    const std::size_t ideal = std::min(n.value_or(topn.size()), test.size());
    double idcg = 0.0;
    for (std::size_t r = 1; r <= ideal; ++r) idcg += discount(r);
    return idcg > 0.0 ? dcg / idcg : 0.0;
}

double decomposed_recall(std::span<const ItemId> topn, std::span<const ItemId> test, std::span<const std::size_t> group_of_item,
                         std::size_t group) {
    if (test.empty()) return 0.0;
    std::size_t hits = 0;
    for (ItemId i : topn) {
        if (i >= group_of_item.size()) throw ConfigError("decomposed_recall: item grouping does not cover item " + std::to_string(i));
        if (group_of_item[i] == group && contains(test, i)) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(test.size());
}

std::vector<ItemId> top_n(std::span<const double> scores, std::span<const ItemId> excluded, std::size_t n) {
    std::vector<ItemId> candidates;
    candidates.reserve(scores.size());
    for (std::size_t j = 0; j < scores.size(); ++j)
        if (!contains(excluded, static_cast<ItemId>(j))) candidates.push_back(static_cast<ItemId>(j));
    const std::size_t take = std::min(n, candidates.size());
    const auto before = [&](ItemId a, ItemId b) { return scores[a] != scores[b] ? scores[a] > scores[b] : a < b; };
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(take), candidates.end(), before);
    candidates.resize(take);
    return candidates;
}

MetricsReport evaluate_scores(const ScoreFunction& scores, const InteractionSet& exclude, const InteractionSet& test,
                              const EvalOptions& options) {
    if (options.ns.empty()) throw ConfigError("evaluate: at least one cutoff N is required");
    if (exclude.user_count != test.user_count || exclude.item_count != test.item_count)
        throw ConfigError("evaluate: train and test sets disagree on I x J");

    MetricsReport report;
    report.ns = options.ns;
    std::sort(report.ns.begin(), report.ns.end());
    report.ns.erase(std::unique(report.ns.begin(), report.ns.end()), report.ns.end());
    if (report.ns.front() == 0) throw ConfigError("evaluate: cutoff N must be positive");
    const std::size_t max_n = report.ns.back();

    std::optional<DegreeGrouping> grouping;
    if (options.group_boundaries) {
        grouping = group_by_degree(exclude, *options.group_boundaries);
        report.group_boundaries = grouping->boundaries;
    }
    const std::size_t groups = grouping ? grouping->group_count() : 0;

    const auto seen = exclude.items_by_user();
    const auto held = test.items_by_user();

    std::map<std::size_t, MetricPair> sums;
    std::map<std::size_t, std::vector<double>> decomposed_sums;
    std::map<std::size_t, std::vector<GroupMetrics>> group_sums;
    for (std::size_t n : report.ns) {
        sums[n] = {};
        if (grouping) {
            decomposed_sums[n].assign(groups, 0.0);
            group_sums[n].assign(groups, {});
        }
    }

    for (std::size_t u = 0; u < test.user_count; ++u) {
        const auto& truth = held[u];
        if (truth.empty()) continue;
        ++report.users_evaluated;
        const auto s = scores(u);
        if (s.size() != test.item_count) throw ConfigError("evaluate: score vector has the wrong length");
        const auto ranked = top_n(s, seen[u], max_n);
        for (std::size_t n : report.ns) {
            const std::span<const ItemId> head(ranked.data(), std::min(n, ranked.size()));
            const double r = recall_at_n(head, truth);
            const double g = ndcg_at_n(head, truth, n);
            sums[n].recall += r;
            sums[n].ndcg += g;
            if (grouping) {
                for (std::size_t k = 0; k < groups; ++k) decomposed_sums[n][k] += decomposed_recall(head, truth, grouping->group_of_item, k);
                auto& cell = group_sums[n][grouping->group_of_user[u]];
                ++cell.users;
                cell.metrics.recall += r;
                cell.metrics.ndcg += g;
            }
        }
    }
    if (report.users_evaluated == 0) throw DataError("evaluate: no user has a held-out interaction");

    const double users = static_cast<double>(report.users_evaluated);
    for (std::size_t n : report.ns) {
        report.overall[n] = {sums[n].recall / users, sums[n].ndcg / users};
        if (grouping) {
            auto& dec = report.decomposed_recall[n];
            for (double v : decomposed_sums[n]) dec.push_back(v / users);
            auto& ug = report.user_groups[n];
            for (const auto& cell : group_sums[n]) {
                GroupMetrics m{cell.users, {}};
                if (cell.users > 0) {
                    m.metrics.recall = cell.metrics.recall / static_cast<double>(cell.users);
                    m.metrics.ndcg = cell.metrics.ndcg / static_cast<double>(cell.users);
                }
                ug.push_back(m);
            }
        }
    }
    return report;
}

MetricsReport evaluate(const EmbeddingState& state, const InteractionSet& exclude, const InteractionSet& test, const EvalOptions& options) {
    if (state.e_user.rows() != test.user_count || state.e_item.rows() != test.item_count)
        throw ConfigError("evaluate: final embeddings do not match the interaction sets (run propagation first)");
    return evaluate_scores([&state](std::size_t u) { return score_all(state, u); }, exclude, test, options);
}

double mad(const Matrix& embeddings, std::size_t sample, std::uint64_t seed) {
    const std::size_t n = embeddings.rows();
    if (n < 2) throw ConfigError("mad: need at least two embeddings");
    std::vector<std::size_t> rows(n);
    std::iota(rows.begin(), rows.end(), 0);
    if (sample >= 2 && sample < n) {
        std::mt19937_64 rng(seed);
        std::shuffle(rows.begin(), rows.end(), rng);
        rows.resize(sample);
        std::sort(rows.begin(), rows.end());
    }
    const std::size_t m = rows.size();
    const std::size_t d = embeddings.cols();
    Matrix unit(m, d);
    for (std::size_t a = 0; a < m; ++a) {
        const auto src = embeddings.row(rows[a]);
        const double nv = norm(src);
        if (nv == 0.0) continue;  // zero rows: cosine 0 with everything
        for (std::size_t j = 0; j < d; ++j) unit(a, j) = src[j] / nv;
    }
    double total = 0.0;
    for (std::size_t a = 0; a < m; ++a) {
        double row_sum = 0.0;
        for (std::size_t b = 0; b < m; ++b)
            if (a != b) row_sum += 1.0 - dot(unit.row(a), unit.row(b));
        total += row_sum / static_cast<double>(m - 1);
    }
    return total / static_cast<double>(m);
}

std::string MetricsReport::to_json() const {
    nlohmann::ordered_json j;
    j["users_evaluated"] = users_evaluated;
    j["ns"] = ns;
    for (std::size_t n : ns) {
        const auto& m = overall.at(n);
        j["overall"][std::to_string(n)] = {{"recall", m.recall}, {"ndcg", m.ndcg}};
    }
    if (!group_boundaries.empty() || !decomposed_recall.empty()) {
        j["group_boundaries"] = group_boundaries;
        for (const auto& [n, values] : decomposed_recall) j["decomposed_recall"][std::to_string(n)] = values;
        for (const auto& [n, cells] : user_groups) {
            auto& arr = j["user_groups"][std::to_string(n)];
            arr = nlohmann::ordered_json::array();
            for (const auto& c : cells) arr.push_back({{"users", c.users}, {"recall", c.metrics.recall}, {"ndcg", c.metrics.ndcg}});
        }
    }
    if (mad) j["mad"] = *mad;
    return j.dump(2) + "\n";
}

std::string MetricsReport::to_tsv() const {
    std::ostringstream out;
    out << std::setprecision(17);
    out << "section\tn\tgroup\tmetric\tvalue\n";
    out << "overall\t-\t-\tusers\t" << users_evaluated << '\n';
    for (std::size_t n : ns) {
        out << "overall\t" << n << "\t-\trecall\t" << overall.at(n).recall << '\n';
        out << "overall\t" << n << "\t-\tndcg\t" << overall.at(n).ndcg << '\n';
    }
    for (const auto& [n, values] : decomposed_recall)
        for (std::size_t g = 0; g < values.size(); ++g) out << "item_group\t" << n << '\t' << g << "\tdecomposed_recall\t" << values[g] << '\n';
    for (const auto& [n, cells] : user_groups)
        for (std::size_t g = 0; g < cells.size(); ++g) {
            out << "user_group\t" << n << '\t' << g << "\tusers\t" << cells[g].users << '\n';
            out << "user_group\t" << n << '\t' << g << "\trecall\t" << cells[g].metrics.recall << '\n';
            out << "user_group\t" << n << '\t' << g << "\tndcg\t" << cells[g].metrics.ndcg << '\n';
        }
    if (mad) out << "embedding\t-\t-\tmad\t" << *mad << '\n';
    return out.str();
}

}  // namespace lightgcl
