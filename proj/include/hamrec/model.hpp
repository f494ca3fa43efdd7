#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "hamrec/graph.hpp"
#include "hamrec/hamming.hpp"
#include "hamrec/matrix.hpp"

namespace hamrec {

// Trainable state: one real parameter row per node, decoded to proxy codes
// through tanh(beta * e). Rows follow the shared users-then-items layout.
struct ModelParams {
    Matrix embed;       // (N + M) x K
    double beta = 1.0;  // sign-smoothing scale, grows over training
    std::uint32_t layers = 2;
    std::uint32_t bits = 64;
};

// Xavier-uniform over a (N+M) x K parameter sheet: fan_in = N + M,
// fan_out = K.
ModelParams init_params(std::uint32_t num_users,
                        std::uint32_t num_items,
                        std::uint32_t bits,
                        std::uint32_t layers,
                        double beta,
                        std::mt19937_64& rng);

struct DropoutConfig {
    double node_ratio = 0.0;  // fraction of nodes masked out of aggregation
    double bit_ratio = 0.0;   // fraction of final-code bits zeroed
    bool enabled = false;     // training only; always off at inference
};

// Per-layer cached tensors. s is the pre-clamp aggregate (A+I)H, m its
// clamp, d = H (x) m, c the refinement factors; node_kept flags which
// nodes contributed as neighbors this pass (empty means all).
struct LayerTrace {
    Matrix s;
    Matrix m;
    Matrix d;
    Matrix c;
    std::vector<std::uint8_t> node_kept;
};

struct ForwardTrace {
    std::vector<Matrix> h;           // h[0] .. h[L]
    std::vector<LayerTrace> layers;  // size L
    std::vector<std::uint8_t> bit_kept;  // (N+M) x K flags; empty when off

    const Matrix& initial() const { return h.front(); }
    const Matrix& final() const { return h.back(); }
};

// H^(0) = tanh(beta * E), entries in (-1, 1).
Matrix initial_codes(const ModelParams& params);

// Single-node propagation step, the reference form of one layer.
struct NodeStep {
    std::vector<double> s;
    std::vector<double> m;
    std::vector<double> d;
    std::vector<double> c;
    std::vector<double> h_next;
};

NodeStep propagate_node(std::span<const double> h_self,
                        const std::vector<std::span<const double>>& neighbor_codes);

// Keep-mask with exactly floor(ratio * (N+M)) nodes dropped, selected
// uniformly without replacement. Dropped nodes stop contributing as
// neighbors; the self term is never dropped.
std::vector<std::uint8_t> node_dropout_mask(std::uint32_t num_nodes,
                                            double ratio,
                                            std::mt19937_64& rng);

// Per-entry keep flags; each bit is zeroed independently with probability
// ratio. Zeroed bits contribute 0 to inner products, no rescaling.
std::vector<std::uint8_t> bit_dropout_mask(std::size_t rows,
                                           std::size_t cols,
                                           double ratio,
                                           std::mt19937_64& rng);

// One full-graph layer via CSR accumulation: never materializes A, matches
// propagate_node row-for-row bit-exactly. node_kept empty = no dropout.
std::pair<Matrix, LayerTrace> propagate_matrix(const Matrix& H,
                                               const BipartiteGraph& graph,
                                               std::vector<std::uint8_t> node_kept = {},
                                               unsigned threads = 1);

// initial_codes then `layers` propagation steps, caching everything the
// backward pass needs. Dropout masks are re-sampled per call when enabled.
ForwardTrace forward(const ModelParams& params,
                     const BipartiteGraph& graph,
                     const DropoutConfig& dropout,
                     std::mt19937_64& rng,
                     unsigned threads = 1);

inline double predict(std::span<const double> h_user, std::span<const double> h_item) {
    double score = 0.0;
    for (std::size_t k = 0; k < h_user.size(); ++k) score += h_user[k] * h_item[k];
    return score;
}

// Inference path: hard-sign initial codes (sign(E), ties to +1) propagated
// with dropout off. Outputs stay in {-1, +1}.
Matrix inference_codes(const ModelParams& params,
                       const BipartiteGraph& graph,
                       unsigned threads = 1);

// Convenience: inference codes, binarized and packed.
PackedCodes inference_packed(const ModelParams& params,
                             const BipartiteGraph& graph,
                             unsigned threads = 1);

}  // namespace hamrec
