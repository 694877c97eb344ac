// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <map>
#include <random>
#include <set>

#include "lightgcl/data.hpp"
#include "lightgcl/errors.hpp"
#include "support/fixtures.hpp"

using namespace lightgcl;
using lightgcl::testing::TempDir;
using lightgcl::testing::write_file;

TEST_CASE("load_interactions reads pairs and ignores extra fields") {
    TempDir dir("load");
    write_file(dir / "a.tsv", "0\t0\t5\t881250949\n0\t1\t3\n1\t1\n");
    const auto loaded = load_interactions(dir / "a.tsv", InputFormat::tsv);
    CHECK(loaded.set.user_count == 2);
    CHECK(loaded.set.item_count == 2);
    CHECK(loaded.set.size() == 3);
}

TEST_CASE("load_interactions collapses duplicates") {
    TempDir dir("dup");
    write_file(dir / "a.csv", "0,0\n0,0\n");
    const auto loaded = load_interactions(dir / "a.csv", InputFormat::csv);
    CHECK(loaded.set.size() == 1);
}

TEST_CASE("load_interactions re-indexes sparse ids densely") {
    TempDir dir("reindex");
    write_file(dir / "a.tsv", "900\t42\n7\t42\n7\t3\n");
    const auto loaded = load_interactions(dir / "a.tsv", InputFormat::tsv);
    REQUIRE(loaded.ids.raw_users == std::vector<std::uint64_t>{7, 900});
    REQUIRE(loaded.ids.raw_items == std::vector<std::uint64_t>{3, 42});
    // raw (7,3) -> (0,0), (7,42) -> (0,1), (900,42) -> (1,1)
    CHECK(loaded.set.pairs == std::vector<Interaction>{{0, 0}, {0, 1}, {1, 1}});

    write_idmap(dir / "idmap.tsv", loaded.ids);
    const IdMap back = read_idmap(dir / "idmap.tsv");
    CHECK(back.raw_users == loaded.ids.raw_users);
    CHECK(back.raw_items == loaded.ids.raw_items);
}

TEST_CASE("load_interactions reports malformed lines with their line number") {
    TempDir dir("bad");
    write_file(dir / "a.tsv", "0\t1\n2\tx\n");
    try {
        load_interactions(dir / "a.tsv", InputFormat::tsv);
        FAIL("expected a parse error");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find(":2:") != std::string::npos);
    }
    write_file(dir / "b.tsv", "-1\t1\n");
    CHECK_THROWS_AS(load_interactions(dir / "b.tsv", InputFormat::tsv), DataError);
    write_file(dir / "c.tsv", "5\n");
    CHECK_THROWS_AS(load_interactions(dir / "c.tsv", InputFormat::tsv), DataError);
}

TEST_CASE("load_interactions rejects empty input") {
    TempDir dir("empty");
    write_file(dir / "a.tsv", "");
    CHECK_THROWS_AS(load_interactions(dir / "a.tsv", InputFormat::tsv), DataError);
    CHECK_THROWS_AS(load_interactions(dir / "missing.tsv", InputFormat::tsv), DataError);
}

TEST_CASE("re-indexing is a bijection") {
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<std::uint64_t> raw(0, 1'000'000);
    TempDir dir("bij");
    std::string text;
    std::set<std::pair<std::uint64_t, std::uint64_t>> raw_pairs;
    for (int k = 0; k < 300; ++k) {
        const auto u = raw(rng) % 5000, i = raw(rng);
        raw_pairs.insert({u, i});
        text += std::to_string(u) + "\t" + std::to_string(i) + "\n";
    }
    write_file(dir / "a.tsv", text);
    const auto loaded = load_interactions(dir / "a.tsv", InputFormat::tsv);
    std::set<std::pair<std::uint64_t, std::uint64_t>> mapped_back;
    for (const auto& p : loaded.set.pairs) mapped_back.insert({loaded.ids.raw_users[p.user], loaded.ids.raw_items[p.item]});
    CHECK(mapped_back == raw_pairs);
    CHECK(std::set<std::uint64_t>(loaded.ids.raw_users.begin(), loaded.ids.raw_users.end()).size() == loaded.ids.raw_users.size());
}

TEST_CASE("split keeps single-interaction users in train") {
    const auto set = InteractionSet::make(1, 3, {{0, 2}});
    const auto [train, test] = split(set, 0.2, 1);
    CHECK(train.size() == 1);
    CHECK(test.size() == 0);
}

TEST_CASE("split sends ceil(ratio * deg) to test") {
    std::vector<Interaction> pairs;
    for (ItemId i = 0; i < 10; ++i) pairs.push_back({0, i});
    const auto set = InteractionSet::make(1, 10, pairs);
    const auto [train, test] = split(set, 0.2, 3);
    CHECK(test.size() == 2);
    CHECK(train.size() == 8);
    const auto [train3, test3] = split(set, 0.25, 3);  // ceil(2.5) = 3
    CHECK(test3.size() == 3);
}

TEST_CASE("split is a deterministic partition") {
    std::mt19937_64 rng(9);
    const auto set = lightgcl::testing::random_interactions(30, 40, 0.2, rng);
    const auto [a_train, a_test] = split(set, 0.3, 77);
    const auto [b_train, b_test] = split(set, 0.3, 77);
    CHECK(a_train == b_train);
    CHECK(a_test == b_test);

    std::vector<Interaction> merged = a_train.pairs;
    merged.insert(merged.end(), a_test.pairs.begin(), a_test.pairs.end());
    std::sort(merged.begin(), merged.end());
    CHECK(merged == set.pairs);  // no overlap: sizes add up and the union is exact
    CHECK(a_train.size() + a_test.size() == set.size());

    const auto [c_train, c_test] = split(set, 0.3, 78);
    CHECK(c_test != a_test);
}

TEST_CASE("split rejects ratios outside (0,1)") {
    const auto set = InteractionSet::make(1, 1, {{0, 0}});
    CHECK_THROWS_AS(split(set, 0.0, 1), ConfigError);
    CHECK_THROWS_AS(split(set, 1.0, 1), ConfigError);
    CHECK_THROWS_AS(split(set, -0.5, 1), ConfigError);
}

TEST_CASE("normalize single edge") {
    const auto a = normalize(InteractionSet::make(1, 1, {{0, 0}}));
    CHECK(a.at(0, 0) == 1.0);
}

TEST_CASE("normalize three-edge toy graph") {
    // deg_u = {2, 1}, deg_v = {1, 2}
    const auto a = normalize(InteractionSet::make(2, 2, {{0, 0}, {0, 1}, {1, 1}}));
    CHECK(a.at(0, 0) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
    CHECK(a.at(0, 1) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(a.at(1, 1) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
    CHECK(a.at(1, 0) == 0.0);
}

TEST_CASE("normalize is degree-exact and bounded by one") {
    std::mt19937_64 rng(21);
    const auto set = lightgcl::testing::random_interactions(50, 70, 0.08, rng);
    const auto a = normalize(set);
    const auto du = set.user_degrees();
    const auto dv = set.item_degrees();
    for (const auto& p : set.pairs) {
        const double w = a.at(p.user, p.item);
        CHECK(w <= 1.0);
        CHECK(std::abs(w * std::sqrt(double(du[p.user])) * std::sqrt(double(dv[p.item])) - 1.0) <= 1e-12);
    }
    CHECK(a.nnz() == set.size());
}

TEST_CASE("group_by_degree uses half-open buckets") {
    std::vector<Interaction> pairs;
    // item 0: 10 interactions, item 1: 30 interactions
    for (UserId u = 0; u < 30; ++u) pairs.push_back({u, 1});
    for (UserId u = 0; u < 10; ++u) pairs.push_back({u, 0});
    const auto g = group_by_degree(InteractionSet::make(30, 2, pairs), {15, 30});
    CHECK(g.group_count() == 3);
    CHECK(g.group_of_item[0] == 0);
    CHECK(g.group_of_item[1] == 2);
}

TEST_CASE("group_by_degree on degrees {3, 20, 100}") {
    std::vector<Interaction> pairs;
    for (UserId u = 0; u < 3; ++u) pairs.push_back({u, 0});
    for (UserId u = 0; u < 20; ++u) pairs.push_back({u, 1});
    for (UserId u = 0; u < 100; ++u) pairs.push_back({u, 2});
    const auto g = group_by_degree(InteractionSet::make(100, 3, pairs), {15, 30});
    CHECK(g.group_of_item == std::vector<std::size_t>{0, 1, 2});
    // every user has degree 1, 2 or 3 -> group 0
    CHECK(std::all_of(g.group_of_user.begin(), g.group_of_user.end(), [](std::size_t x) { return x == 0; }));
}

TEST_CASE("group_by_degree edge cases") {
    const auto set = InteractionSet::make(2, 2, {{0, 0}, {1, 0}});
    const auto single = group_by_degree(set, {});
    CHECK(single.group_count() == 1);
    CHECK(single.group_of_item == std::vector<std::size_t>{0, 0});
    CHECK_THROWS_AS(group_by_degree(set, {30, 15}), ConfigError);
    CHECK_THROWS_AS(group_by_degree(set, {15, 15}), ConfigError);
    // a degree-0 item still lands in group 0
    CHECK(group_by_degree(set, {1}).group_of_item[1] == 0);
}
