#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <set>

#include "hamrec/graph.hpp"

using namespace hamrec;

namespace {

std::vector<Interaction> edges(std::initializer_list<std::pair<std::uint32_t, std::uint32_t>> e) {
    std::vector<Interaction> out;
    for (auto [u, i] : e) out.push_back({u, i, -1});
    return out;
}

}  // namespace

TEST_CASE("build_graph constructs sorted CSR in both directions") {
    auto g = build_graph(edges({{0, 0}, {0, 1}, {1, 1}}), 2, 2);
    auto row0 = g.items_of(0);
    REQUIRE(row0.size() == 2);
    CHECK(row0[0] == 0);
    CHECK(row0[1] == 1);
    auto item1 = g.users_of(1);
    REQUIRE(item1.size() == 2);
    CHECK(item1[0] == 0);
    CHECK(item1[1] == 1);
    CHECK(g.user_neighbors.size() + g.item_neighbors.size() == 6);  // 2 x 3 directed
    CHECK(g.has_edge(0, 1));
    CHECK(!g.has_edge(1, 0));

    CHECK_THROWS_AS((void)build_graph(std::vector<Interaction>{}, 0, 0), std::invalid_argument);
}

TEST_CASE("CSR directions are symmetric and recover the edge multiset") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 25; ++trial) {
        std::uint32_t nu = 1 + rng() % 12, ni = 1 + rng() % 12;
        std::set<std::pair<std::uint32_t, std::uint32_t>> seen;
        for (std::size_t e = 0; e < 1 + rng() % 40; ++e) {
            seen.insert({std::uint32_t(rng() % nu), std::uint32_t(rng() % ni)});
        }
        std::vector<Interaction> train;
        for (auto [u, i] : seen) train.push_back({u, i, -1});
        auto g = build_graph(train, nu, ni);

        std::set<std::pair<std::uint32_t, std::uint32_t>> from_users, from_items;
        for (std::uint32_t u = 0; u < nu; ++u) {
            for (auto i : g.items_of(u)) from_users.insert({u, i});
        }
        for (std::uint32_t i = 0; i < ni; ++i) {
            for (auto u : g.users_of(i)) from_items.insert({u, i});
        }
        CHECK(from_users == seen);
        CHECK(from_items == seen);
    }
}

TEST_CASE("sample_negatives returns only non-interacted items") {
    // user 0 interacted with items 0..8 of 10: only item 9 remains
    std::vector<Interaction> train;
    for (std::uint32_t i = 0; i < 9; ++i) train.push_back({0, i, -1});
    train.push_back({1, 9, -1});
    auto g = build_graph(train, 2, 10);

    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 20; ++trial) {
        auto negs = sample_negatives(g, 0, 3, rng);
        for (auto j : negs) CHECK(j == 9);
    }

    auto row = g.items_of(1);
    auto negs = sample_negatives(g, 1, 50, rng);
    for (auto j : negs) {
        CHECK(!std::binary_search(row.begin(), row.end(), j));
    }

    std::mt19937_64 a(42), b(42);
    CHECK(sample_negatives(g, 1, 10, a) == sample_negatives(g, 1, 10, b));
}

TEST_CASE("sample_negatives reports a saturated user") {
    std::vector<Interaction> train;
    for (std::uint32_t i = 0; i < 4; ++i) train.push_back({0, i, -1});
    auto g = build_graph(train, 1, 4);
    std::mt19937_64 rng(1);
    CHECK_THROWS_AS((void)sample_negatives(g, 0, 1, rng), std::runtime_error);
}

TEST_CASE("sample_triplets yields valid, reproducible batches") {
    std::vector<Interaction> train;
    for (std::uint32_t u = 0; u < 20; ++u) {
        for (std::uint32_t i = 0; i < 30; ++i) {
            if ((u + i) % 3 == 0) train.push_back({u, i, -1});
        }
    }
    auto g = build_graph(train, 20, 30);

    std::mt19937_64 rng(123);
    auto triplets = sample_triplets(g, 3000, rng);
    REQUIRE(triplets.size() == 3000);
    std::map<std::uint32_t, std::size_t> user_hits;
    for (const auto& t : triplets) {
        CHECK(g.has_edge(t.user, t.pos_item));
        CHECK(!g.has_edge(t.user, t.neg_item));
        ++user_hits[t.user];
    }
    CHECK(user_hits.size() == 20);  // uniform edge sampling touches everyone

    std::mt19937_64 rng2(123);
    auto again = sample_triplets(g, 3000, rng2);
    for (std::size_t i = 0; i < triplets.size(); ++i) {
        CHECK(triplets[i].user == again[i].user);
        CHECK(triplets[i].pos_item == again[i].pos_item);
        CHECK(triplets[i].neg_item == again[i].neg_item);
    }
}
