// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "lightgcl/sparse.hpp"

namespace lightgcl {

using UserId = std::uint32_t;
using ItemId = std::uint32_t;

struct Interaction {
    UserId user;
    ItemId item;
    auto operator<=>(const Interaction&) const = default;
};

// Implicit-feedback interactions over dense ids. Pairs are unique and kept
// sorted by (user, item).
struct InteractionSet {
    std::size_t user_count = 0;
    std::size_t item_count = 0;
    std::vector<Interaction> pairs;

    // Sorts, deduplicates and range-checks. Throws DataError on out-of-range ids.
    static InteractionSet make(std::size_t users, std::size_t items, std::vector<Interaction> pairs);

    std::size_t size() const { return pairs.size(); }
    bool empty() const { return pairs.empty(); }

    std::vector<std::size_t> user_degrees() const;
    std::vector<std::size_t> item_degrees() const;
    // Sorted item list per user.
    std::vector<std::vector<ItemId>> items_by_user() const;

    bool operator==(const InteractionSet&) const = default;
};

// Raw id for each dense id; dense ids are assigned in ascending raw-id order.
struct IdMap {
    std::vector<std::uint64_t> raw_users;
    std::vector<std::uint64_t> raw_items;
};

enum class InputFormat { tsv, csv };

struct LoadedInteractions {
    InteractionSet set;
    IdMap ids;
};

// Reads `user<sep>item[<sep>ignored...]` lines. Blank lines are skipped.
LoadedInteractions load_interactions(const std::filesystem::path& path, InputFormat format);

// Reads a file already in dense ids (train.tsv/test.tsv) without re-indexing.
InteractionSet load_dense_interactions(const std::filesystem::path& path, std::size_t users, std::size_t items);

void write_interactions(const std::filesystem::path& path, const InteractionSet& set);
void write_idmap(const std::filesystem::path& path, const IdMap& ids);
IdMap read_idmap(const std::filesystem::path& path);

// Per-user random holdout: ceil(ratio * deg(u)) interactions of each user go to
// the second set, capped so that at least one stays in the first.
std::pair<InteractionSet, InteractionSet> split(const InteractionSet& set, double test_ratio, std::uint64_t seed);

// Symmetric degree normalisation D_u^{-1/2} A D_v^{-1/2} of the interaction matrix.
SparseBipartite normalize(const InteractionSet& train);

// Degree buckets [0,b0), [b0,b1), ..., [b_last, inf).
struct DegreeGrouping {
    std::vector<std::size_t> boundaries;
    std::vector<std::size_t> group_of_user;
    std::vector<std::size_t> group_of_item;

    std::size_t group_count() const { return boundaries.size() + 1; }
    std::size_t group_for_degree(std::size_t degree) const;
};

DegreeGrouping group_by_degree(const InteractionSet& set, std::vector<std::size_t> boundaries);

}  // namespace lightgcl
