#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hamrec/dataset.hpp"
#include "hamrec/train.hpp"

namespace hamrec {

// Full pipeline configuration. Defaults are the reference hyperparameters
// (K=64, L=2, lr 3e-4, lambda1 0.1, lambda2 1e-7, margin 0.2, batch 3000,
// patience 10, 5 negatives). Precedence: CLI flags override config-file
// values override these defaults.
struct RunConfig {
    // data
    std::string dataset;
    std::string format = "auto";  // auto | csv | tsv
    double min_rating = 0.0;      // 0 keeps every rated pair
    std::uint32_t kcore = 1;
    double test_frac = 0.3;
    double valid_frac = 0.1;  // fraction of the training part
    std::uint64_t split_seed = 42;

    // model
    std::uint32_t bits = 64;
    std::uint32_t layers = 2;
    double beta0 = 1.0;
    double beta_growth = 1.4142135623730951;
    std::uint32_t beta_interval = 10;
    double beta_cap = 64.0;

    // loss / optimizer
    double lr = 3e-4;
    double lambda1 = 0.1;
    double lambda2 = 1e-7;
    double margin = 0.2;
    bool rank_initial = true;
    bool rank_final = true;
    std::uint32_t negatives = 5;
    double node_dropout = 0.0;
    double bit_dropout = 0.0;
    std::uint64_t batch = 3000;
    std::uint32_t patience = 10;
    std::uint32_t max_epochs = 1000;
    std::uint64_t train_seed = 2021;
    std::uint32_t validation_k = 50;

    // evaluation
    std::string eval_ks = "50,100";
    bool hr_any_hit = false;

    // execution
    unsigned threads = 0;  // 0 = all hardware threads
    std::string out_dir;   // empty = $HAMREC_OUT or ./out

    // key = value text, '#' comments. Unknown keys are rejected.
    void load_file(const std::string& path);
    void save_file(const std::string& path) const;
    std::string to_key_values() const;

    LogFormat log_format() const { return log_format_from_string(format); }
    std::optional<double> rating_threshold() const {
        if (min_rating > 0.0) return min_rating;
        return std::nullopt;
    }
    std::vector<std::uint32_t> parse_eval_ks() const;
    std::string resolved_out_dir() const;
    TrainConfig train_config() const;
};

}  // namespace hamrec
