#include "hamrec/graph.hpp"

#include <algorithm>
#include <stdexcept>

namespace hamrec {

bool BipartiteGraph::has_edge(std::uint32_t user, std::uint32_t item) const {
    auto row = items_of(user);
    return std::binary_search(row.begin(), row.end(), item);
}

BipartiteGraph build_graph(std::span<const Interaction> train,
                           std::uint32_t num_users,
                           std::uint32_t num_items) {
    if (train.empty()) throw std::invalid_argument("build_graph: empty training set");

    BipartiteGraph g;
    g.num_users = num_users;
    g.num_items = num_items;
    g.user_offsets.assign(num_users + 1, 0);
    g.item_offsets.assign(num_items + 1, 0);

    for (const auto& inter : train) {
        ++g.user_offsets[inter.user + 1];
        ++g.item_offsets[inter.item + 1];
    }
    for (std::uint32_t u = 0; u < num_users; ++u) g.user_offsets[u + 1] += g.user_offsets[u];
    for (std::uint32_t i = 0; i < num_items; ++i) g.item_offsets[i + 1] += g.item_offsets[i];

    g.user_neighbors.resize(train.size());
    g.item_neighbors.resize(train.size());
    std::vector<std::uint64_t> ucur(g.user_offsets.begin(), g.user_offsets.end() - 1);
    std::vector<std::uint64_t> icur(g.item_offsets.begin(), g.item_offsets.end() - 1);
    for (const auto& inter : train) {
        g.user_neighbors[ucur[inter.user]++] = inter.item;
        g.item_neighbors[icur[inter.item]++] = inter.user;
    }
    for (std::uint32_t u = 0; u < num_users; ++u) {
        std::sort(g.user_neighbors.begin() + g.user_offsets[u],
                  g.user_neighbors.begin() + g.user_offsets[u + 1]);
    }
    for (std::uint32_t i = 0; i < num_items; ++i) {
        std::sort(g.item_neighbors.begin() + g.item_offsets[i],
                  g.item_neighbors.begin() + g.item_offsets[i + 1]);
    }
    return g;
}

BipartiteGraph build_graph(const InteractionDataset& train) {
    return build_graph(train.interactions, train.num_users, train.num_items);
}

std::vector<std::uint32_t> sample_negatives(const BipartiteGraph& graph,
                                            std::uint32_t user,
                                            std::size_t count,
                                            std::mt19937_64& rng) {
    if (count < 1) throw std::invalid_argument("sample_negatives: count must be >= 1");
    if (graph.user_degree(user) >= graph.num_items) {
        throw std::runtime_error("sample_negatives: user " + std::to_string(user) +
                                 " interacted with every item");
    }
    auto row = graph.items_of(user);
    std::uniform_int_distribution<std::uint32_t> pick(0, graph.num_items - 1);
    std::vector<std::uint32_t> negatives;
    negatives.reserve(count);
    while (negatives.size() < count) {
        std::uint32_t item = pick(rng);
        if (!std::binary_search(row.begin(), row.end(), item)) negatives.push_back(item);
    }
    return negatives;
}

std::vector<Triplet> sample_triplets(const BipartiteGraph& graph,
                                     std::size_t batch_size,
                                     std::mt19937_64& rng) {
    if (graph.num_edges() == 0) throw std::invalid_argument("sample_triplets: empty graph");

    std::uniform_int_distribution<std::uint64_t> pick_edge(0, graph.num_edges() - 1);
    std::vector<Triplet> triplets;
    triplets.reserve(batch_size);
    for (std::size_t t = 0; t < batch_size; ++t) {
        std::uint64_t edge = pick_edge(rng);
        // Edge index -> owning user via the offset table.
        auto it = std::upper_bound(graph.user_offsets.begin(), graph.user_offsets.end(), edge);
        std::uint32_t user =
            static_cast<std::uint32_t>(std::distance(graph.user_offsets.begin(), it)) - 1;
        std::uint32_t pos = graph.user_neighbors[edge];
        std::uint32_t neg = sample_negatives(graph, user, 1, rng)[0];
        triplets.push_back({user, pos, neg});
    }
    return triplets;
}

}  // namespace hamrec
