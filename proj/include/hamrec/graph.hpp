#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "hamrec/dataset.hpp"

namespace hamrec {

// CSR adjacency of the training interactions in both directions. Neighbor
// lists are sorted ascending so membership tests are binary searches.
// Immutable after construction.
struct BipartiteGraph {
    std::uint32_t num_users = 0;
    std::uint32_t num_items = 0;
    std::vector<std::uint64_t> user_offsets;  // size num_users + 1
    std::vector<std::uint32_t> user_neighbors;
    std::vector<std::uint64_t> item_offsets;  // size num_items + 1
    std::vector<std::uint32_t> item_neighbors;

    std::span<const std::uint32_t> items_of(std::uint32_t user) const {
        return {user_neighbors.data() + user_offsets[user],
                user_neighbors.data() + user_offsets[user + 1]};
    }
    std::span<const std::uint32_t> users_of(std::uint32_t item) const {
        return {item_neighbors.data() + item_offsets[item],
                item_neighbors.data() + item_offsets[item + 1]};
    }
    std::uint32_t user_degree(std::uint32_t user) const {
        return static_cast<std::uint32_t>(user_offsets[user + 1] - user_offsets[user]);
    }
    std::uint32_t item_degree(std::uint32_t item) const {
        return static_cast<std::uint32_t>(item_offsets[item + 1] - item_offsets[item]);
    }
    std::uint64_t num_edges() const { return user_neighbors.size(); }
    std::uint32_t num_nodes() const { return num_users + num_items; }

    bool has_edge(std::uint32_t user, std::uint32_t item) const;
};

BipartiteGraph build_graph(std::span<const Interaction> train,
                           std::uint32_t num_users,
                           std::uint32_t num_items);
BipartiteGraph build_graph(const InteractionDataset& train);

// n items the user did not interact with in the training graph, by
// rejection sampling. Duplicates within one draw are permitted.
std::vector<std::uint32_t> sample_negatives(const BipartiteGraph& graph,
                                            std::uint32_t user,
                                            std::size_t count,
                                            std::mt19937_64& rng);

struct Triplet {
    std::uint32_t user = 0;
    std::uint32_t pos_item = 0;
    std::uint32_t neg_item = 0;
};

// Positives drawn uniformly from train edges, one sampled negative each.
std::vector<Triplet> sample_triplets(const BipartiteGraph& graph,
                                     std::size_t batch_size,
                                     std::mt19937_64& rng);

}  // namespace hamrec
