#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hamrec/dataset.hpp"
#include "hamrec/hamming.hpp"

namespace hamrec {

// Recall-style hit ratio: |top-k intersect relevant| / min(|relevant|, k).
// The any_hit variant returns 1 as soon as one relevant item made top-k.
// `relevant` must be sorted ascending; `ranked` must have no duplicates.
double hit_ratio_at_k(std::span<const std::uint32_t> ranked,
                      std::span<const std::uint32_t> relevant,
                      std::size_t k,
                      bool any_hit = false);

// Binary-relevance NDCG: DCG sums 1/log2(1+i) at 1-based hit positions i,
// IDCG places min(|relevant|, k) hits first.
double ndcg_at_k(std::span<const std::uint32_t> ranked,
                 std::span<const std::uint32_t> relevant,
                 std::size_t k);

struct KMetrics {
    std::uint32_t k = 0;
    double hr = 0.0;
    double ndcg = 0.0;
};

struct GroupReport {
    std::uint32_t users = 0;
    std::uint64_t interaction_sum = 0;
    std::uint32_t degree_threshold = 0;  // max training degree in the group
    std::vector<KMetrics> metrics;
};

struct MetricsReport {
    std::vector<KMetrics> global;
    std::uint32_t evaluated_users = 0;
    std::uint32_t skipped_users = 0;  // empty test set
    std::vector<GroupReport> groups;  // 4 sparsity groups when computable

    std::string to_table() const;
    std::string to_tsv() const;
};

// Four contiguous groups of the degree-sorted user list with near-equal
// training-interaction sums (greedy prefix cuts at g * total / 4).
struct SparsityGroups {
    std::vector<std::uint32_t> users_sorted;  // ascending training degree
    std::array<std::size_t, 5> cuts{};        // group g = [cuts[g], cuts[g+1])
    std::array<std::uint64_t, 4> interaction_sums{};
    std::array<std::uint32_t, 4> degree_thresholds{};
};

SparsityGroups sparsity_groups(const std::vector<std::uint32_t>& train_degree,
                               std::span<const std::uint32_t> users);

// Test-set ranking metrics: per test user, one top-max(ks) scan over all
// items excluding everything the user interacted with during training
// (train and validation parts), judged against the user's test items.
MetricsReport evaluate(const PackedCodes& codes,
                       const SplitDataset& split,
                       std::span<const std::uint32_t> ks,
                       bool any_hit_hr = false,
                       unsigned threads = 1);

// Single-K holdout evaluation against arbitrary per-user exclude/relevant
// lists (both sorted); used for validation during training.
struct HoldoutMetrics {
    double hr = 0.0;
    double ndcg = 0.0;
    std::uint32_t evaluated_users = 0;
};

HoldoutMetrics evaluate_holdout(const PackedCodes& codes,
                                const std::vector<std::vector<std::uint32_t>>& exclude,
                                const std::vector<std::vector<std::uint32_t>>& relevant,
                                std::uint32_t k,
                                bool any_hit_hr = false,
                                unsigned threads = 1);

// Times full top-k scans per query for packed XOR+popcount scoring vs a
// dense float inner product over the same +-1 codes, verifying both paths
// return identical rankings before reporting speed. Single-threaded.
struct BenchReport {
    std::size_t items = 0;
    std::size_t bits = 0;
    std::size_t queries = 0;
    std::size_t k = 0;
    double packed_us_per_query = 0.0;
    double dense_us_per_query = 0.0;
    double speedup = 0.0;

    std::string to_text() const;
};

BenchReport bench_retrieval(const PackedCodes& item_codes,
                            const std::vector<float>& dense_item_codes,  // rows x bits
                            std::size_t query_count,
                            std::size_t k,
                            std::uint64_t seed);

}  // namespace hamrec
