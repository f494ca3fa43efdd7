#include "hamrec/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hamrec {

ModelParams init_params(std::uint32_t num_users,
                        std::uint32_t num_items,
                        std::uint32_t bits,
                        std::uint32_t layers,
                        double beta,
                        std::mt19937_64& rng) {
    if (bits < 1 || layers < 1) {
        throw std::invalid_argument("init_params: bits and layers must be >= 1");
    }
    if (!(beta > 0.0)) throw std::invalid_argument("init_params: beta must be positive");

    ModelParams params;
    params.bits = bits;
    params.layers = layers;
    params.beta = beta;
    std::size_t nodes = std::size_t{num_users} + num_items;
    double bound = std::sqrt(6.0 / (double(nodes) + double(bits)));
    std::uniform_real_distribution<double> xavier(-bound, bound);
    params.embed = Matrix(nodes, bits);
    for (double& v : params.embed.data()) v = xavier(rng);
    return params;
}

Matrix initial_codes(const ModelParams& params) {
    if (!all_finite(params.embed)) {
        throw std::runtime_error("initial_codes: non-finite parameters");
    }
    Matrix h0(params.embed.rows(), params.embed.cols());
    const auto& e = params.embed.data();
    auto& out = h0.data();
    for (std::size_t i = 0; i < e.size(); ++i) out[i] = std::tanh(params.beta * e[i]);
    return h0;
}

NodeStep propagate_node(std::span<const double> h_self,
                        const std::vector<std::span<const double>>& neighbor_codes) {
    const std::size_t width = h_self.size();
    for (const auto& nb : neighbor_codes) {
        if (nb.size() != width) throw std::invalid_argument("propagate_node: width mismatch");
    }
    NodeStep step;
    step.s.assign(h_self.begin(), h_self.end());
    for (const auto& nb : neighbor_codes) {
        for (std::size_t k = 0; k < width; ++k) step.s[k] += nb[k];
    }
    step.m = clamp(step.s);
    step.d.resize(width);
    step.c.resize(width);
    step.h_next.resize(width);
    for (std::size_t k = 0; k < width; ++k) {
        step.d[k] = h_self[k] * step.m[k];
        step.c[k] = refine_transform(step.d[k]);
        step.h_next[k] = step.c[k] * h_self[k];
    }
    return step;
}

std::vector<std::uint8_t> node_dropout_mask(std::uint32_t num_nodes,
                                            double ratio,
                                            std::mt19937_64& rng) {
    if (!(ratio >= 0.0 && ratio < 1.0)) {
        throw std::invalid_argument("node_dropout_mask: ratio must be in [0, 1)");
    }
    std::vector<std::uint8_t> kept(num_nodes, 1);
    auto drop_count = static_cast<std::uint32_t>(ratio * double(num_nodes));
    if (drop_count == 0) return kept;

    // Partial Fisher-Yates: the first drop_count entries of a uniform
    // permutation are the dropped nodes.
    std::vector<std::uint32_t> order(num_nodes);
    for (std::uint32_t i = 0; i < num_nodes; ++i) order[i] = i;
    for (std::uint32_t i = 0; i < drop_count; ++i) {
        std::uniform_int_distribution<std::uint32_t> pick(i, num_nodes - 1);
        std::swap(order[i], order[pick(rng)]);
        kept[order[i]] = 0;
    }
    return kept;
}

std::vector<std::uint8_t> bit_dropout_mask(std::size_t rows,
                                           std::size_t cols,
                                           double ratio,
                                           std::mt19937_64& rng) {
    if (!(ratio >= 0.0 && ratio < 1.0)) {
        throw std::invalid_argument("bit_dropout_mask: ratio must be in [0, 1)");
    }
    std::vector<std::uint8_t> kept(rows * cols, 1);
    if (ratio == 0.0) return kept;
    std::bernoulli_distribution drop(ratio);
    for (auto& bit : kept) bit = drop(rng) ? 0 : 1;
    return kept;
}

std::pair<Matrix, LayerTrace> propagate_matrix(const Matrix& H,
                                               const BipartiteGraph& graph,
                                               std::vector<std::uint8_t> node_kept,
                                               unsigned threads) {
    const std::size_t nodes = graph.num_nodes();
    const std::size_t width = H.cols();
    if (H.rows() != nodes) throw std::invalid_argument("propagate_matrix: row count != N + M");
    if (!node_kept.empty() && node_kept.size() != nodes) {
        throw std::invalid_argument("propagate_matrix: bad node mask size");
    }

    LayerTrace trace;
    trace.s = Matrix(nodes, width);
    trace.m = Matrix(nodes, width);
    trace.d = Matrix(nodes, width);
    trace.c = Matrix(nodes, width);
    trace.node_kept = std::move(node_kept);
    Matrix h_next(nodes, width);

    const std::uint32_t num_users = graph.num_users;
    const std::uint8_t* kept = trace.node_kept.empty() ? nullptr : trace.node_kept.data();

    parallel_for(nodes, threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t r = begin; r < end; ++r) {
            const double* h = H.row(r);
            double* s = trace.s.row(r);
            std::copy(h, h + width, s);
            auto neighbors = r < num_users
                                 ? graph.items_of(static_cast<std::uint32_t>(r))
                                 : graph.users_of(static_cast<std::uint32_t>(r - num_users));
            for (std::uint32_t nb : neighbors) {
                std::size_t nb_row = r < num_users ? std::size_t{num_users} + nb : nb;
                if (kept && !kept[nb_row]) continue;
                const double* hn = H.row(nb_row);
                for (std::size_t k = 0; k < width; ++k) s[k] += hn[k];
            }
            double* m = trace.m.row(r);
            double* d = trace.d.row(r);
            double* c = trace.c.row(r);
            double* out = h_next.row(r);
            for (std::size_t k = 0; k < width; ++k) {
                m[k] = clamp(s[k]);
                d[k] = h[k] * m[k];
                c[k] = refine_transform(d[k]);
                out[k] = c[k] * h[k];
            }
        }
    });

    return {std::move(h_next), std::move(trace)};
}

ForwardTrace forward(const ModelParams& params,
                     const BipartiteGraph& graph,
                     const DropoutConfig& dropout,
                     std::mt19937_64& rng,
                     unsigned threads) {
    ForwardTrace trace;
    trace.h.reserve(params.layers + 1);
    trace.h.push_back(initial_codes(params));

    const bool node_drop = dropout.enabled && dropout.node_ratio > 0.0;
    const bool bit_drop = dropout.enabled && dropout.bit_ratio > 0.0;
    for (std::uint32_t l = 0; l < params.layers; ++l) {
        std::vector<std::uint8_t> mask;
        if (node_drop) mask = node_dropout_mask(graph.num_nodes(), dropout.node_ratio, rng);
        auto [h_next, layer] = propagate_matrix(trace.h.back(), graph, std::move(mask), threads);
        trace.layers.push_back(std::move(layer));
        trace.h.push_back(std::move(h_next));
    }
    if (bit_drop) {
        trace.bit_kept =
            bit_dropout_mask(trace.h.back().rows(), trace.h.back().cols(), dropout.bit_ratio, rng);
    }
    return trace;
}

Matrix inference_codes(const ModelParams& params,
                       const BipartiteGraph& graph,
                       unsigned threads) {
    if (!all_finite(params.embed)) {
        throw std::runtime_error("inference_codes: non-finite parameters");
    }
    Matrix h(params.embed.rows(), params.embed.cols());
    const auto& e = params.embed.data();
    auto& out = h.data();
    for (std::size_t i = 0; i < e.size(); ++i) out[i] = e[i] >= 0.0 ? 1.0 : -1.0;
    for (std::uint32_t l = 0; l < params.layers; ++l) {
        h = propagate_matrix(h, graph, {}, threads).first;
    }
    return h;
}

PackedCodes inference_packed(const ModelParams& params,
                             const BipartiteGraph& graph,
                             unsigned threads) {
    return binarize(inference_codes(params, graph, threads));
}

}  // namespace hamrec
