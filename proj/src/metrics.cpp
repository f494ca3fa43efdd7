#include "hamrec/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <queue>
#include <random>
#include <stdexcept>
#include <unordered_map>

#include "hamrec/matrix.hpp"

namespace hamrec {

double hit_ratio_at_k(std::span<const std::uint32_t> ranked,
                      std::span<const std::uint32_t> relevant,
                      std::size_t k,
                      bool any_hit) {
    if (relevant.empty()) throw std::invalid_argument("hit_ratio_at_k: empty relevant set");
    std::size_t depth = std::min(k, ranked.size());
    std::size_t hits = 0;
    for (std::size_t i = 0; i < depth; ++i) {
        if (std::binary_search(relevant.begin(), relevant.end(), ranked[i])) ++hits;
    }
    if (any_hit) return hits > 0 ? 1.0 : 0.0;
    return double(hits) / double(std::min(relevant.size(), k));
}

double ndcg_at_k(std::span<const std::uint32_t> ranked,
                 std::span<const std::uint32_t> relevant,
                 std::size_t k) {
    if (relevant.empty()) throw std::invalid_argument("ndcg_at_k: empty relevant set");
    std::size_t depth = std::min(k, ranked.size());
    double dcg = 0.0;
    for (std::size_t i = 0; i < depth; ++i) {
        if (std::binary_search(relevant.begin(), relevant.end(), ranked[i])) {
            dcg += 1.0 / std::log2(double(i) + 2.0);
        }
    }
    double idcg = 0.0;
    std::size_t ideal_hits = std::min(relevant.size(), k);
    for (std::size_t i = 0; i < ideal_hits; ++i) idcg += 1.0 / std::log2(double(i) + 2.0);
    return dcg / idcg;
}

SparsityGroups sparsity_groups(const std::vector<std::uint32_t>& train_degree,
                               std::span<const std::uint32_t> users) {
    if (users.size() < 4) throw std::invalid_argument("sparsity_groups: fewer than 4 users");

    SparsityGroups groups;
    groups.users_sorted.assign(users.begin(), users.end());
    std::sort(groups.users_sorted.begin(), groups.users_sorted.end(),
              [&](std::uint32_t a, std::uint32_t b) {
                  if (train_degree[a] != train_degree[b]) return train_degree[a] < train_degree[b];
                  return a < b;
              });

    std::uint64_t total = 0;
    for (std::uint32_t u : groups.users_sorted) total += train_degree[u];

    // Greedy prefix cuts: group g ends at the first user whose cumulative
    // degree sum reaches g * total / 4 (exact integer comparison).
    groups.cuts[0] = 0;
    std::size_t idx = 0;
    std::uint64_t cum = 0;
    for (std::size_t g = 1; g <= 3; ++g) {
        while (idx < groups.users_sorted.size() && 4 * cum < total * g) {
            cum += train_degree[groups.users_sorted[idx]];
            ++idx;
        }
        groups.cuts[g] = idx;
    }
    groups.cuts[4] = groups.users_sorted.size();

    for (std::size_t g = 0; g < 4; ++g) {
        std::uint64_t sum = 0;
        std::uint32_t max_deg = 0;
        for (std::size_t i = groups.cuts[g]; i < groups.cuts[g + 1]; ++i) {
            sum += train_degree[groups.users_sorted[i]];
            max_deg = std::max(max_deg, train_degree[groups.users_sorted[i]]);
        }
        groups.interaction_sums[g] = sum;
        groups.degree_thresholds[g] = max_deg;
    }
    return groups;
}

namespace {

std::vector<std::uint32_t> ranked_items(const PackedCodes& codes,
                                        std::uint32_t user,
                                        std::uint32_t num_users,
                                        std::uint32_t num_items,
                                        std::size_t k,
                                        std::span<const std::uint32_t> exclude) {
    auto hits = top_k_scan(codes, user, num_users, num_items, k, exclude);
    std::vector<std::uint32_t> items(hits.size());
    for (std::size_t i = 0; i < hits.size(); ++i) items[i] = hits[i].item;
    return items;
}

std::vector<std::uint32_t> merge_sorted(const std::vector<std::uint32_t>& a,
                                        const std::vector<std::uint32_t>& b) {
    std::vector<std::uint32_t> out(a.size() + b.size());
    std::merge(a.begin(), a.end(), b.begin(), b.end(), out.begin());
    return out;
}

std::vector<std::vector<std::uint32_t>> per_user_sorted(std::span<const Interaction> part,
                                                        std::uint32_t num_users) {
    std::vector<std::vector<std::uint32_t>> lists(num_users);
    for (const auto& inter : part) lists[inter.user].push_back(inter.item);
    for (auto& row : lists) std::sort(row.begin(), row.end());
    return lists;
}

}  // namespace

MetricsReport evaluate(const PackedCodes& codes,
                       const SplitDataset& split,
                       std::span<const std::uint32_t> ks,
                       bool any_hit_hr,
                       unsigned threads) {
    if (ks.empty()) throw std::invalid_argument("evaluate: no cutoffs given");
    if (codes.rows != std::size_t{split.num_users} + split.num_items) {
        throw std::invalid_argument("evaluate: code rows disagree with split layout");
    }

    const std::uint32_t num_users = split.num_users;
    auto train_items = per_user_sorted(split.train, num_users);
    auto valid_items = per_user_sorted(split.validation, num_users);
    auto test_items = per_user_sorted(split.test, num_users);

    // The paper's protocol scores every item except those the user
    // interacted with during training; the validation part was carved out
    // of the training set, so it is excluded too.
    std::vector<std::vector<std::uint32_t>> exclude(num_users);
    std::vector<std::uint32_t> train_degree(num_users);
    for (std::uint32_t u = 0; u < num_users; ++u) {
        exclude[u] = merge_sorted(train_items[u], valid_items[u]);
        train_degree[u] = static_cast<std::uint32_t>(exclude[u].size());
    }

    std::vector<std::uint32_t> eval_users;
    for (std::uint32_t u = 0; u < num_users; ++u) {
        if (!test_items[u].empty()) eval_users.push_back(u);
    }

    MetricsReport report;
    report.evaluated_users = static_cast<std::uint32_t>(eval_users.size());
    report.skipped_users = num_users - report.evaluated_users;
    if (eval_users.empty()) throw std::runtime_error("evaluate: no users with test items");

    std::size_t max_k = *std::max_element(ks.begin(), ks.end());
    Matrix hr(eval_users.size(), ks.size());
    Matrix ndcg(eval_users.size(), ks.size());
    parallel_for(eval_users.size(), threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            std::uint32_t u = eval_users[i];
            auto ranked = ranked_items(codes, u, num_users, split.num_items, max_k, exclude[u]);
            for (std::size_t ki = 0; ki < ks.size(); ++ki) {
                hr(i, ki) = hit_ratio_at_k(ranked, test_items[u], ks[ki], any_hit_hr);
                ndcg(i, ki) = ndcg_at_k(ranked, test_items[u], ks[ki]);
            }
        }
    });

    for (std::size_t ki = 0; ki < ks.size(); ++ki) {
        KMetrics km;
        km.k = ks[ki];
        for (std::size_t i = 0; i < eval_users.size(); ++i) {
            km.hr += hr(i, ki);
            km.ndcg += ndcg(i, ki);
        }
        km.hr /= double(eval_users.size());
        km.ndcg /= double(eval_users.size());
        report.global.push_back(km);
    }

    if (eval_users.size() >= 4) {
        auto groups = sparsity_groups(std::vector<std::uint32_t>(train_degree), eval_users);
        std::unordered_map<std::uint32_t, std::size_t> pos;
        for (std::size_t i = 0; i < eval_users.size(); ++i) pos[eval_users[i]] = i;
        for (std::size_t g = 0; g < 4; ++g) {
            GroupReport gr;
            gr.users = static_cast<std::uint32_t>(groups.cuts[g + 1] - groups.cuts[g]);
            gr.interaction_sum = groups.interaction_sums[g];
            gr.degree_threshold = groups.degree_thresholds[g];
            for (std::size_t ki = 0; ki < ks.size(); ++ki) {
                KMetrics km;
                km.k = ks[ki];
                for (std::size_t i = groups.cuts[g]; i < groups.cuts[g + 1]; ++i) {
                    std::size_t row = pos[groups.users_sorted[i]];
                    km.hr += hr(row, ki);
                    km.ndcg += ndcg(row, ki);
                }
                if (gr.users > 0) {
                    km.hr /= double(gr.users);
                    km.ndcg /= double(gr.users);
                }
                gr.metrics.push_back(km);
            }
            report.groups.push_back(gr);
        }
    }
    return report;
}

HoldoutMetrics evaluate_holdout(const PackedCodes& codes,
                                const std::vector<std::vector<std::uint32_t>>& exclude,
                                const std::vector<std::vector<std::uint32_t>>& relevant,
                                std::uint32_t k,
                                bool any_hit_hr,
                                unsigned threads) {
    const std::uint32_t num_users = static_cast<std::uint32_t>(relevant.size());
    const std::uint32_t num_items = static_cast<std::uint32_t>(codes.rows - num_users);

    std::vector<std::uint32_t> eval_users;
    for (std::uint32_t u = 0; u < num_users; ++u) {
        if (!relevant[u].empty()) eval_users.push_back(u);
    }
    HoldoutMetrics out;
    out.evaluated_users = static_cast<std::uint32_t>(eval_users.size());
    if (eval_users.empty()) return out;

    std::vector<double> hr(eval_users.size()), ndcg(eval_users.size());
    parallel_for(eval_users.size(), threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            std::uint32_t u = eval_users[i];
            auto ranked = ranked_items(codes, u, num_users, num_items, k, exclude[u]);
            hr[i] = hit_ratio_at_k(ranked, relevant[u], k, any_hit_hr);
            ndcg[i] = ndcg_at_k(ranked, relevant[u], k);
        }
    });
    for (std::size_t i = 0; i < eval_users.size(); ++i) {
        out.hr += hr[i];
        out.ndcg += ndcg[i];
    }
    out.hr /= double(eval_users.size());
    out.ndcg /= double(eval_users.size());
    return out;
}

namespace {

struct DenseHit {
    std::uint32_t item;
    float score;
};

struct DenseWorseOnTop {
    bool operator()(const DenseHit& a, const DenseHit& b) const {
        if (a.score != b.score) return a.score > b.score;
        return a.item < b.item;
    }
};

std::vector<DenseHit> dense_top_k(const float* items,
                                  std::size_t num_items,
                                  std::size_t width,
                                  const float* query,
                                  std::size_t k) {
    std::priority_queue<DenseHit, std::vector<DenseHit>, DenseWorseOnTop> best;
    for (std::uint32_t item = 0; item < num_items; ++item) {
        const float* row = items + std::size_t{item} * width;
        float score = 0.0f;
        for (std::size_t j = 0; j < width; ++j) score += query[j] * row[j];
        if (best.size() < k) {
            best.push({item, score});
        } else if (score > best.top().score ||
                   (score == best.top().score && item < best.top().item)) {
            best.pop();
            best.push({item, score});
        }
    }
    std::vector<DenseHit> ranked(best.size());
    for (std::size_t i = ranked.size(); i-- > 0;) {
        ranked[i] = best.top();
        best.pop();
    }
    return ranked;
}

}  // namespace

BenchReport bench_retrieval(const PackedCodes& item_codes,
                            const std::vector<float>& dense_item_codes,
                            std::size_t query_count,
                            std::size_t k,
                            std::uint64_t seed) {
    const std::size_t num_items = item_codes.rows;
    const std::size_t width = item_codes.width;
    if (dense_item_codes.size() != num_items * width) {
        throw std::invalid_argument("bench_retrieval: dense matrix size mismatch");
    }
    // Both representations must encode identical codes.
    {
        Matrix unpacked = unpack(item_codes);
        for (std::size_t i = 0; i < dense_item_codes.size(); ++i) {
            if (double(dense_item_codes[i]) != unpacked.data()[i]) {
                throw std::invalid_argument("bench_retrieval: representations disagree");
            }
        }
    }

    // Random +-1 queries, materialized in both representations.
    std::mt19937_64 rng(seed);
    PackedCodes queries;
    queries.rows = query_count;
    queries.width = width;
    queries.words_per_row = words_for_width(width);
    queries.bits.resize(query_count * queries.words_per_row);
    std::vector<float> dense_queries(query_count * width);
    for (std::size_t q = 0; q < query_count; ++q) {
        auto row = queries.row(q);
        for (std::size_t w = 0; w < queries.words_per_row; ++w) row[w] = rng();
        std::size_t tail = width % 64;
        if (tail) row[queries.words_per_row - 1] &= (std::uint64_t{1} << tail) - 1;
        for (std::size_t b = 0; b < width; ++b) {
            dense_queries[q * width + b] = (row[b / 64] >> (b % 64)) & 1 ? 1.0f : -1.0f;
        }
    }

    using clock = std::chrono::steady_clock;
    std::vector<std::vector<ScanHit>> packed_results(query_count);
    auto t0 = clock::now();
    for (std::size_t q = 0; q < query_count; ++q) {
        packed_results[q] = top_k_scan(item_codes, queries.row(q), 0, num_items, k, {});
    }
    auto t1 = clock::now();
    std::vector<std::vector<DenseHit>> dense_results(query_count);
    for (std::size_t q = 0; q < query_count; ++q) {
        dense_results[q] =
            dense_top_k(dense_item_codes.data(), num_items, width, &dense_queries[q * width], k);
    }
    auto t2 = clock::now();

    // Correctness precedes speed: identical rankings or hard failure.
    for (std::size_t q = 0; q < query_count; ++q) {
        if (packed_results[q].size() != dense_results[q].size()) {
            throw std::runtime_error("bench_retrieval: ranking length mismatch");
        }
        for (std::size_t i = 0; i < packed_results[q].size(); ++i) {
            if (packed_results[q][i].item != dense_results[q][i].item ||
                float(packed_results[q][i].score) != dense_results[q][i].score) {
                throw std::runtime_error("bench_retrieval: rankings diverge at query " +
                                         std::to_string(q));
            }
        }
    }

    BenchReport report;
    report.items = num_items;
    report.bits = width;
    report.queries = query_count;
    report.k = k;
    report.packed_us_per_query =
        std::chrono::duration<double, std::micro>(t1 - t0).count() / double(query_count);
    report.dense_us_per_query =
        std::chrono::duration<double, std::micro>(t2 - t1).count() / double(query_count);
    report.speedup = report.dense_us_per_query / report.packed_us_per_query;
    return report;
}

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

}  // namespace

std::string MetricsReport::to_table() const {
    std::string out;
    out += "users evaluated: " + std::to_string(evaluated_users) +
           " (skipped, no test items: " + std::to_string(skipped_users) + ")\n";
    out += "K\tHR@K\tNDCG@K\n";
    for (const auto& km : global) {
        out += std::to_string(km.k) + "\t" + fmt(km.hr) + "\t" + fmt(km.ndcg) + "\n";
    }
    if (!groups.empty()) {
        out += "\nsparsity groups (ascending training degree, near-equal interaction sums)\n";
        out += "group\tusers\tinter_sum\tmax_deg";
        for (const auto& km : global) {
            out += "\tHR@" + std::to_string(km.k) + "\tNDCG@" + std::to_string(km.k);
        }
        out += "\n";
        for (std::size_t g = 0; g < groups.size(); ++g) {
            const auto& gr = groups[g];
            out += std::to_string(g + 1) + "\t" + std::to_string(gr.users) + "\t" +
                   std::to_string(gr.interaction_sum) + "\t" +
                   std::to_string(gr.degree_threshold);
            for (const auto& km : gr.metrics) {
                out += "\t" + fmt(km.hr) + "\t" + fmt(km.ndcg);
            }
            out += "\n";
        }
    }
    return out;
}

std::string MetricsReport::to_tsv() const {
    std::string out = "scope\tk\thr\tndcg\tusers\n";
    for (const auto& km : global) {
        out += "global\t" + std::to_string(km.k) + "\t" + fmt(km.hr) + "\t" + fmt(km.ndcg) +
               "\t" + std::to_string(evaluated_users) + "\n";
    }
    for (std::size_t g = 0; g < groups.size(); ++g) {
        for (const auto& km : groups[g].metrics) {
            out += "group" + std::to_string(g + 1) + "\t" + std::to_string(km.k) + "\t" +
                   fmt(km.hr) + "\t" + fmt(km.ndcg) + "\t" + std::to_string(groups[g].users) +
                   "\n";
        }
    }
    return out;
}

std::string BenchReport::to_text() const {
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "items=%zu bits=%zu queries=%zu k=%zu\n"
                  "packed scan: %.2f us/query\n"
                  "dense scan:  %.2f us/query\n"
                  "speedup:     %.2fx (identical rankings verified)\n",
                  items, bits, queries, k, packed_us_per_query, dense_us_per_query, speedup);
    return buf;
}

}  // namespace hamrec
