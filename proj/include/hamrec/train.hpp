#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "hamrec/dataset.hpp"
#include "hamrec/graph.hpp"
#include "hamrec/model.hpp"

namespace hamrec {

struct LossConfig {
    double lambda1 = 0.1;  // trade-off weight on the ranking losses
    double lambda2 = 1e-7; // L2 weight on the parameter sheet
    double margin = 0.2;   // hinge margin
    bool rank_initial = true;
    bool rank_final = true;
    std::uint32_t negatives_per_positive = 5;  // cross-entropy negatives
};

struct AdamConfig {
    double lr = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct AdamState {
    Matrix first_moment;
    Matrix second_moment;
    std::uint64_t step = 0;
};

AdamState init_adam(std::size_t rows, std::size_t cols);

// Standard bias-corrected Adam update of params in place. Throws on a
// non-finite gradient.
void adam_step(AdamState& state, Matrix& params, const Matrix& grad, const AdamConfig& cfg);

inline double sigmoid(double x) {
    if (x >= 0.0) {
        double e = std::exp(-x);
        return 1.0 / (1.0 + e);
    }
    double e = std::exp(x);
    return e / (1.0 + e);
}

inline double softplus(double x) {
    return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

// L = -sum r*log(sigma(y)) + (1-r)*log(1-sigma(y)), in softplus form so
// scores up to +-K stay finite. Gradient per score: sigma(y) - r.
struct CrossEntropyResult {
    double loss = 0.0;
    std::vector<double> grad;
};

CrossEntropyResult cross_entropy_loss(std::span<const double> scores,
                                      std::span<const std::uint8_t> labels);

// L = sum max(0, -sigma(y_pos) + sigma(y_neg) + alpha). Hinge exactly at
// zero counts as inactive; active terms get -sigma'(y_pos) / +sigma'(y_neg).
struct RankingLossResult {
    double loss = 0.0;
    std::vector<double> grad_pos;
    std::vector<double> grad_neg;
};

RankingLossResult ranking_loss(std::span<const double> pos_scores,
                               std::span<const double> neg_scores,
                               double alpha);

// One optimization batch: ranking triplets plus negatives_per_positive
// cross-entropy negatives per triplet, flattened row-major.
struct TrainBatch {
    std::vector<Triplet> triplets;
    std::vector<std::uint32_t> ce_negatives;
};

void fill_ce_negatives(TrainBatch& batch,
                       const BipartiteGraph& graph,
                       std::uint32_t negatives_per_positive,
                       std::mt19937_64& rng);

// Loss term contributions to the optimized total (trade-off weights baked
// in, so total() is their plain sum).
struct LossBreakdown {
    double cross = 0.0;
    double rank_initial = 0.0;
    double rank_final = 0.0;
    double l2 = 0.0;
    double total() const { return cross + rank_initial + rank_final + l2; }
};

// Scores the batch on the traced codes and accumulates upstream gradients:
// grad_final w.r.t. H^(L) (bit-dropout replayed), grad_initial w.r.t.
// H^(0) from the initial-state ranking loss. Either output may be null
// when only the value is needed.
LossBreakdown total_loss(const TrainBatch& batch,
                         const ForwardTrace& trace,
                         const ModelParams& params,
                         std::uint32_t num_users,
                         const LossConfig& cfg,
                         Matrix* grad_final,
                         Matrix* grad_initial);

// Exact reverse-mode pass through the propagation stack and the tanh
// proxy; returns dL/dE including the 2*lambda2*E regularizer term.
Matrix backward(const ForwardTrace& trace,
                const BipartiteGraph& graph,
                const Matrix& grad_final,
                const Matrix& grad_initial,
                const ModelParams& params,
                double lambda2,
                unsigned threads = 1);

// ---- independent gradient oracle ----------------------------------------

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::size_t coords_checked = 0;
};

// Central differences of the total loss against a supplied gradient over a
// parameter subset (all coordinates when max_coords allows). Relative
// error denominator is max(|analytic|, |numeric|, 1e-8).
GradCheckReport compare_gradient_fd(const Matrix& analytic,
                                    const ModelParams& params,
                                    const BipartiteGraph& graph,
                                    const TrainBatch& batch,
                                    const LossConfig& cfg,
                                    double epsilon,
                                    std::size_t max_coords = SIZE_MAX,
                                    std::uint64_t subset_seed = 0);

GradCheckReport finite_difference_check(const ModelParams& params,
                                        const BipartiteGraph& graph,
                                        const TrainBatch& batch,
                                        const LossConfig& cfg,
                                        double epsilon,
                                        std::size_t max_coords = SIZE_MAX,
                                        std::uint64_t subset_seed = 0);

// Smallest distance of any traced value to a subgradient kink: |s| to the
// clamp boundaries, d to the ReLU corner, hinge arguments to zero.
double min_kink_distance(const ForwardTrace& trace,
                         const TrainBatch& batch,
                         const LossConfig& cfg,
                         std::uint32_t num_users);

// Random small instance for gradient checking, resampled (bounded) until
// every traced value sits further than margin_mult * epsilon from a kink.
struct GradCheckInstance {
    BipartiteGraph graph;
    ModelParams params;
    TrainBatch batch;
    std::size_t resamples = 0;
};

GradCheckInstance make_gradcheck_instance(std::uint32_t num_users,
                                          std::uint32_t num_items,
                                          std::uint32_t bits,
                                          std::uint32_t layers,
                                          const LossConfig& cfg,
                                          double epsilon,
                                          std::uint64_t seed,
                                          double margin_mult = 10.0);

// ---- training loop --------------------------------------------------------

struct TrainSchedule {
    double beta0 = 1.0;
    double beta_growth = 1.4142135623730951;  // sqrt(2)
    std::uint32_t beta_interval = 10;         // epochs between growth ticks
    double beta_cap = 64.0;
    std::uint32_t max_epochs = 1000;
    std::uint32_t patience = 10;      // non-improving validation epochs
    std::size_t batch_size = 3000;    // triplets per mini-batch
    std::uint32_t validation_k = 50;  // early stopping watches HR@this
};

struct TrainConfig {
    std::uint32_t bits = 64;
    std::uint32_t layers = 2;
    LossConfig loss;
    AdamConfig adam;
    DropoutConfig dropout;
    TrainSchedule schedule;
    std::uint64_t seed = 2021;
    unsigned threads = 1;
};

struct EpochStats {
    std::uint32_t epoch = 0;  // 1-based
    LossBreakdown loss;       // summed over the epoch's batches
    double val_hr = 0.0;
    double val_ndcg = 0.0;
    double beta = 1.0;
    double seconds = 0.0;
};

struct TrainReport {
    std::vector<EpochStats> epochs;
    std::uint32_t best_epoch = 0;
    double best_metric = 0.0;
    std::uint32_t validation_k = 50;
    std::string stop_reason;

    // One row per epoch, tab separated. Timing can be omitted so reports
    // from identical seeded runs compare byte-for-byte.
    std::string to_tsv(bool include_timing = true) const;
};

// Everything needed to continue training exactly where it stopped.
struct TrainState {
    ModelParams params;
    Matrix best_embed;
    AdamState adam;
    std::uint32_t epoch = 0;
    std::uint32_t best_epoch = 0;
    double best_metric = -1.0;
    double best_beta = 1.0;
    std::mt19937_64 rng;
};

struct TrainResult {
    ModelParams params;  // parameters at the best validation epoch
    TrainReport report;
};

// Epoch loop: shuffled mini-batches of triplets, forward with dropout,
// total_loss, backward, adam_step; per epoch a beta tick, validation
// HR/NDCG on hard-sign codes, and early stopping on stale validation HR.
TrainResult train(const SplitDataset& split,
                  const BipartiteGraph& graph,
                  const TrainConfig& cfg,
                  TrainState* state = nullptr,
                  const std::function<void(const TrainState&, const EpochStats&)>& after_epoch = {});

}  // namespace hamrec
