#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace hamrec {

struct Interaction {
    std::uint32_t user = 0;
    std::uint32_t item = 0;
    std::int64_t timestamp = -1;  // provenance only, unused by the model
};

// De-duplicated implicit-feedback log with dense indices. Every user index
// in 0..N-1 and item index in 0..M-1 appears in at least one interaction;
// id maps are bijections between original ids and dense indices assigned
// in first-appearance order.
struct InteractionDataset {
    std::uint32_t num_users = 0;
    std::uint32_t num_items = 0;
    std::vector<Interaction> interactions;
    std::vector<std::string> user_ids;  // dense index -> original id
    std::vector<std::string> item_ids;
    std::unordered_map<std::string, std::uint32_t> user_index;  // original id -> dense
    std::unordered_map<std::string, std::uint32_t> item_index;

    bool empty() const { return interactions.empty(); }
};

enum class LogFormat {
    Auto,  // sniff the first data line: "::", then tab, then comma
    Csv,
    Tsv,
};

LogFormat log_format_from_string(const std::string& s);
std::string to_string(LogFormat format);

// Parses delimited text with columns (user, item[, rating][, timestamp]).
// A header line is skipped if its first field is not numeric-looking.
// Rows with rating below `min_rating` are dropped when it is set; the
// default keeps every rated pair. Duplicate (user, item) pairs collapse to
// the first occurrence.
InteractionDataset load_interactions(const std::string& path,
                                     LogFormat format = LogFormat::Auto,
                                     std::optional<double> min_rating = std::nullopt);

struct KCoreResult {
    InteractionDataset dataset;
    std::uint32_t rounds = 0;  // peeling iterations until fixpoint
    std::uint32_t removed_users = 0;
    std::uint32_t removed_items = 0;
};

// Maximal sub-dataset where every user and item has at least k
// interactions (possibly empty), densely re-indexed.
KCoreResult k_core_filter(const InteractionDataset& ds, std::uint32_t k);

// Global uniform random partition. test_frac of all interactions go to
// test, then valid_frac_of_train of the remainder to validation. A user
// whose interactions all landed in test gets one of them moved back to
// train so every test user has a training representation.
struct SplitDataset {
    std::uint32_t num_users = 0;
    std::uint32_t num_items = 0;
    std::vector<std::string> user_ids;
    std::vector<std::string> item_ids;
    std::unordered_map<std::string, std::uint32_t> user_index;
    std::unordered_map<std::string, std::uint32_t> item_index;

    std::vector<Interaction> train;
    std::vector<Interaction> validation;
    std::vector<Interaction> test;

    std::uint64_t seed = 0;
    double test_frac = 0.0;
    double valid_frac_of_train = 0.0;
    std::vector<Interaction> rebalanced;  // interactions moved test -> train

    std::size_t total_interactions() const {
        return train.size() + validation.size() + test.size();
    }
};

SplitDataset split(const InteractionDataset& ds,
                   double test_frac,
                   double valid_frac_of_train,
                   std::uint64_t seed);

// Audit record for a prepared split: JSON with the source settings, seed,
// fractions, resulting counts, and the re-balancing moves. A split is
// re-created by re-running the pipeline with the recorded settings; the
// manifest verifies the result matches.
struct SplitManifest {
    std::string dataset_path;
    std::string format;
    std::optional<double> min_rating;
    std::uint32_t kcore = 1;
    std::uint64_t seed = 0;
    double test_frac = 0.0;
    double valid_frac_of_train = 0.0;
    std::uint32_t num_users = 0;
    std::uint32_t num_items = 0;
    std::uint64_t train_count = 0;
    std::uint64_t validation_count = 0;
    std::uint64_t test_count = 0;
    std::vector<Interaction> rebalanced;
};

SplitManifest make_manifest(const SplitDataset& split,
                            const std::string& dataset_path,
                            LogFormat format,
                            std::optional<double> min_rating,
                            std::uint32_t kcore);

void save_manifest(const std::string& path, const SplitManifest& manifest);
SplitManifest load_manifest(const std::string& path);

// Throws if the manifest does not describe this split.
void verify_manifest(const SplitManifest& manifest, const SplitDataset& split);

}  // namespace hamrec
