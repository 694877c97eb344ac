// SPDX-License-Identifier: Apache-2.0
#include "lightgcl/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <string>
#include <string_view>

#include "lightgcl/errors.hpp"

namespace lightgcl {

InteractionSet InteractionSet::make(std::size_t users, std::size_t items, std::vector<Interaction> pairs) {
    for (const auto& p : pairs) {
        if (p.user >= users || p.item >= items)
            throw DataError("interaction (" + std::to_string(p.user) + "," + std::to_string(p.item) + ") outside " +
                            std::to_string(users) + "x" + std::to_string(items));
    }
    std::sort(pairs.begin(), pairs.end());
    pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
    return InteractionSet{users, items, std::move(pairs)};
}

std::vector<std::size_t> InteractionSet::user_degrees() const {
    std::vector<std::size_t> deg(user_count, 0);
    for (const auto& p : pairs) ++deg[p.user];
    return deg;
}

std::vector<std::size_t> InteractionSet::item_degrees() const {
    std::vector<std::size_t> deg(item_count, 0);
    for (const auto& p : pairs) ++deg[p.item];
    return deg;
}

std::vector<std::vector<ItemId>> InteractionSet::items_by_user() const {
    std::vector<std::vector<ItemId>> out(user_count);
    for (const auto& p : pairs) out[p.user].push_back(p.item);
    return out;  // pairs are sorted, so each list is too
}

namespace {

struct RawPair {
    std::uint64_t user;
    std::uint64_t item;
};

std::uint64_t parse_id(std::string_view field, const std::filesystem::path& path, std::size_t line_no) {
    while (!field.empty() && (field.front() == ' ')) field.remove_prefix(1);
    while (!field.empty() && (field.back() == ' ' || field.back() == '\r')) field.remove_suffix(1);
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (field.empty() || ec != std::errc{} || ptr != field.data() + field.size())
        throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected a nonnegative integer id, got '" +
                        std::string(field) + "'");
    return v;
}

template <typename Fn>
void for_each_pair(const std::filesystem::path& path, char sep, Fn&& fn) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view view(line);
        if (!view.empty() && view.back() == '\r') view.remove_suffix(1);
        if (view.find_first_not_of(" \t") == std::string_view::npos) continue;
        const auto first = view.find(sep);
        if (first == std::string_view::npos)
            throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected at least two fields");
        const auto second = view.find(sep, first + 1);
        const auto item_field = view.substr(first + 1, second == std::string_view::npos ? std::string_view::npos : second - first - 1);
        fn(parse_id(view.substr(0, first), path, line_no), parse_id(item_field, path, line_no), line_no);
    }
}

}  // namespace

LoadedInteractions load_interactions(const std::filesystem::path& path, InputFormat format) {
    const char sep = format == InputFormat::tsv ? '\t' : ',';
    std::vector<RawPair> raw;
    for_each_pair(path, sep, [&](std::uint64_t u, std::uint64_t i, std::size_t) { raw.push_back({u, i}); });
    if (raw.empty()) throw DataError(path.string() + ": no interactions (empty input)");

    std::map<std::uint64_t, UserId> users;
    std::map<std::uint64_t, ItemId> items;
    for (const auto& p : raw) {
        users.emplace(p.user, 0);
        items.emplace(p.item, 0);
    }
    LoadedInteractions out;
    for (auto& [rawid, dense] : users) {
        dense = static_cast<UserId>(out.ids.raw_users.size());
        out.ids.raw_users.push_back(rawid);
    }
    for (auto& [rawid, dense] : items) {
        dense = static_cast<ItemId>(out.ids.raw_items.size());
        out.ids.raw_items.push_back(rawid);
    }
    std::vector<Interaction> pairs;
    pairs.reserve(raw.size());
    for (const auto& p : raw) pairs.push_back({users.at(p.user), items.at(p.item)});
    out.set = InteractionSet::make(users.size(), items.size(), std::move(pairs));
    return out;
}

InteractionSet load_dense_interactions(const std::filesystem::path& path, std::size_t users, std::size_t items) {
    std::vector<Interaction> pairs;
    for_each_pair(path, '\t', [&](std::uint64_t u, std::uint64_t i, std::size_t line_no) {
        if (u >= users || i >= items)
            throw DataError(path.string() + ":" + std::to_string(line_no) + ": id outside " + std::to_string(users) + "x" +
                            std::to_string(items));
        pairs.push_back({static_cast<UserId>(u), static_cast<ItemId>(i)});
    });
    return InteractionSet::make(users, items, std::move(pairs));
}

void write_interactions(const std::filesystem::path& path, const InteractionSet& set) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot open " + path.string() + " for writing");
    for (const auto& p : set.pairs) out << p.user << '\t' << p.item << '\n';
    if (!out) throw DataError("failed writing " + path.string());
}

void write_idmap(const std::filesystem::path& path, const IdMap& ids) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot open " + path.string() + " for writing");
    out << "kind\traw\tdense\n";
    for (std::size_t i = 0; i < ids.raw_users.size(); ++i) out << "user\t" << ids.raw_users[i] << '\t' << i << '\n';
    for (std::size_t i = 0; i < ids.raw_items.size(); ++i) out << "item\t" << ids.raw_items[i] << '\t' << i << '\n';
    if (!out) throw DataError("failed writing " + path.string());
}

IdMap read_idmap(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    IdMap ids;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1 || line.empty()) continue;
        const auto a = line.find('\t');
        const auto b = line.find('\t', a == std::string::npos ? a : a + 1);
        if (a == std::string::npos || b == std::string::npos) throw DataError(path.string() + ":" + std::to_string(line_no) + ": malformed idmap row");
        const std::string kind = line.substr(0, a);
        const auto rawid = parse_id(std::string_view(line).substr(a + 1, b - a - 1), path, line_no);
        const auto dense = parse_id(std::string_view(line).substr(b + 1), path, line_no);
        auto& target = kind == "user" ? ids.raw_users : kind == "item" ? ids.raw_items : throw DataError(path.string() + ":" + std::to_string(line_no) + ": unknown kind '" + kind + "'");
        if (dense != target.size()) throw DataError(path.string() + ":" + std::to_string(line_no) + ": dense ids must be consecutive");
        target.push_back(rawid);
    }
    return ids;
}

std::pair<InteractionSet, InteractionSet> split(const InteractionSet& set, double test_ratio, std::uint64_t seed) {
    if (!(test_ratio > 0.0 && test_ratio < 1.0)) throw ConfigError("test_ratio must lie in (0,1), got " + std::to_string(test_ratio));
    std::mt19937_64 rng(seed);
    std::vector<Interaction> train;
    std::vector<Interaction> test;
    const auto by_user = set.items_by_user();
    for (std::size_t u = 0; u < by_user.size(); ++u) {
        std::vector<ItemId> items = by_user[u];
        if (items.empty()) continue;
        std::shuffle(items.begin(), items.end(), rng);
        const double want = std::ceil(test_ratio * static_cast<double>(items.size()) - 1e-9);
        const std::size_t n_test = std::min(static_cast<std::size_t>(want), items.size() - 1);
        for (std::size_t k = 0; k < items.size(); ++k)
            (k < n_test ? test : train).push_back({static_cast<UserId>(u), items[k]});
    }
    return {InteractionSet::make(set.user_count, set.item_count, std::move(train)),
            InteractionSet::make(set.user_count, set.item_count, std::move(test))};
}

SparseBipartite normalize(const InteractionSet& train) {
    const auto du = train.user_degrees();
    const auto dv = train.item_degrees();
    std::vector<Triplet> entries;
    entries.reserve(train.size());
    for (const auto& p : train.pairs) {
        const double w = 1.0 / std::sqrt(static_cast<double>(du[p.user]) * static_cast<double>(dv[p.item]));
        entries.push_back({p.user, p.item, w});
    }
    return SparseBipartite::from_triplets(train.user_count, train.item_count, std::move(entries));
}

std::size_t DegreeGrouping::group_for_degree(std::size_t degree) const {
    return static_cast<std::size_t>(std::upper_bound(boundaries.begin(), boundaries.end(), degree) - boundaries.begin());
}

DegreeGrouping group_by_degree(const InteractionSet& set, std::vector<std::size_t> boundaries) {
    for (std::size_t k = 1; k < boundaries.size(); ++k)
        if (boundaries[k] <= boundaries[k - 1]) throw ConfigError("degree-group boundaries must be strictly ascending");
    DegreeGrouping g;
    g.boundaries = std::move(boundaries);
    for (std::size_t d : set.user_degrees()) g.group_of_user.push_back(g.group_for_degree(d));
    for (std::size_t d : set.item_degrees()) g.group_of_item.push_back(g.group_for_degree(d));
    return g;
}

}  // namespace lightgcl
