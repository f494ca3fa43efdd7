#include "hamrec/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>
#include <unordered_set>

#include "hamrec/metrics.hpp"

namespace hamrec {

AdamState init_adam(std::size_t rows, std::size_t cols) {
    AdamState state;
    state.first_moment = Matrix(rows, cols);
    state.second_moment = Matrix(rows, cols);
    state.step = 0;
    return state;
}

void adam_step(AdamState& state, Matrix& params, const Matrix& grad, const AdamConfig& cfg) {
    if (!params.same_shape(grad) || !params.same_shape(state.first_moment)) {
        throw std::invalid_argument("adam_step: shape mismatch");
    }
    if (!all_finite(grad)) throw std::runtime_error("adam_step: non-finite gradient");

    ++state.step;
    const double b1 = cfg.beta1;
    const double b2 = cfg.beta2;
    const double bias1 = 1.0 - std::pow(b1, double(state.step));
    const double bias2 = 1.0 - std::pow(b2, double(state.step));
    auto& m = state.first_moment.data();
    auto& v = state.second_moment.data();
    auto& p = params.data();
    const auto& g = grad.data();
    for (std::size_t i = 0; i < p.size(); ++i) {
        m[i] = b1 * m[i] + (1.0 - b1) * g[i];
        v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
        double m_hat = m[i] / bias1;
        double v_hat = v[i] / bias2;
        p[i] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    }
}

CrossEntropyResult cross_entropy_loss(std::span<const double> scores,
                                      std::span<const std::uint8_t> labels) {
    if (scores.size() != labels.size()) {
        throw std::invalid_argument("cross_entropy_loss: length mismatch");
    }
    CrossEntropyResult result;
    result.grad.resize(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
        double y = scores[i];
        double r = labels[i] ? 1.0 : 0.0;
        // -r*log(sigma(y)) - (1-r)*log(1-sigma(y))
        result.loss += r * softplus(-y) + (1.0 - r) * softplus(y);
        result.grad[i] = sigmoid(y) - r;
    }
    return result;
}

RankingLossResult ranking_loss(std::span<const double> pos_scores,
                               std::span<const double> neg_scores,
                               double alpha) {
    if (pos_scores.size() != neg_scores.size()) {
        throw std::invalid_argument("ranking_loss: length mismatch");
    }
    RankingLossResult result;
    result.grad_pos.assign(pos_scores.size(), 0.0);
    result.grad_neg.assign(neg_scores.size(), 0.0);
    for (std::size_t i = 0; i < pos_scores.size(); ++i) {
        double sp = sigmoid(pos_scores[i]);
        double sn = sigmoid(neg_scores[i]);
        double hinge = -sp + sn + alpha;
        if (hinge > 0.0) {
            result.loss += hinge;
            result.grad_pos[i] = -sp * (1.0 - sp);
            result.grad_neg[i] = sn * (1.0 - sn);
        }
    }
    return result;
}

void fill_ce_negatives(TrainBatch& batch,
                       const BipartiteGraph& graph,
                       std::uint32_t negatives_per_positive,
                       std::mt19937_64& rng) {
    batch.ce_negatives.clear();
    batch.ce_negatives.reserve(batch.triplets.size() * negatives_per_positive);
    for (const auto& t : batch.triplets) {
        auto negs = sample_negatives(graph, t.user, negatives_per_positive, rng);
        batch.ce_negatives.insert(batch.ce_negatives.end(), negs.begin(), negs.end());
    }
}

namespace {

double dot(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) acc += a[k] * b[k];
    return acc;
}

void axpy(double* out, double a, const double* x, std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) out[k] += a * x[k];
}

}  // namespace

LossBreakdown total_loss(const TrainBatch& batch,
                         const ForwardTrace& trace,
                         const ModelParams& params,
                         std::uint32_t num_users,
                         const LossConfig& cfg,
                         Matrix* grad_final,
                         Matrix* grad_initial) {
    const Matrix& h_final = trace.final();
    const Matrix& h_initial = trace.initial();
    const std::size_t width = h_final.cols();
    const std::size_t ntrip = batch.triplets.size();
    const std::uint32_t nneg = cfg.negatives_per_positive;
    if (batch.ce_negatives.size() != ntrip * nneg) {
        throw std::invalid_argument("total_loss: ce_negatives size mismatch");
    }

    // Replay bit dropout: scores see zeroed bits, gradients are masked at
    // the end so dropped positions receive none.
    Matrix masked;
    const Matrix* fin = &h_final;
    if (!trace.bit_kept.empty()) {
        masked = h_final;
        auto& vals = masked.data();
        for (std::size_t i = 0; i < vals.size(); ++i) {
            if (!trace.bit_kept[i]) vals[i] = 0.0;
        }
        fin = &masked;
    }

    if (grad_final) *grad_final = Matrix(h_final.rows(), width);
    if (grad_initial) *grad_initial = Matrix(h_final.rows(), width);

    LossBreakdown out;

    // Cross entropy: batch positives labeled 1, sampled negatives labeled 0.
    {
        std::vector<double> scores;
        std::vector<std::uint8_t> labels;
        std::vector<std::pair<std::uint32_t, std::uint32_t>> rows;  // (user row, item row)
        scores.reserve(ntrip * (1 + nneg));
        for (std::size_t t = 0; t < ntrip; ++t) {
            const auto& trip = batch.triplets[t];
            std::uint32_t urow = trip.user;
            std::uint32_t prow = num_users + trip.pos_item;
            scores.push_back(dot(fin->row(urow), fin->row(prow), width));
            labels.push_back(1);
            rows.emplace_back(urow, prow);
            for (std::uint32_t n = 0; n < nneg; ++n) {
                std::uint32_t jrow = num_users + batch.ce_negatives[t * nneg + n];
                scores.push_back(dot(fin->row(urow), fin->row(jrow), width));
                labels.push_back(0);
                rows.emplace_back(urow, jrow);
            }
        }
        auto ce = cross_entropy_loss(scores, labels);
        out.cross = ce.loss;
        if (grad_final) {
            for (std::size_t i = 0; i < rows.size(); ++i) {
                auto [urow, irow] = rows[i];
                axpy(grad_final->row(urow), ce.grad[i], fin->row(irow), width);
                axpy(grad_final->row(irow), ce.grad[i], fin->row(urow), width);
            }
        }
    }

    // Ranking losses over the batch triplets: on the final codes and on
    // the initial state, independently switchable, each weighted lambda1.
    auto add_rank = [&](const Matrix& codes, Matrix* grad, double& out_term) {
        std::vector<double> pos(ntrip), neg(ntrip);
        for (std::size_t t = 0; t < ntrip; ++t) {
            const auto& trip = batch.triplets[t];
            pos[t] = dot(codes.row(trip.user), codes.row(num_users + trip.pos_item), width);
            neg[t] = dot(codes.row(trip.user), codes.row(num_users + trip.neg_item), width);
        }
        auto rl = ranking_loss(pos, neg, cfg.margin);
        out_term = cfg.lambda1 * rl.loss;
        if (grad) {
            for (std::size_t t = 0; t < ntrip; ++t) {
                const auto& trip = batch.triplets[t];
                std::uint32_t urow = trip.user;
                std::uint32_t prow = num_users + trip.pos_item;
                std::uint32_t nrow = num_users + trip.neg_item;
                double gp = cfg.lambda1 * rl.grad_pos[t];
                double gn = cfg.lambda1 * rl.grad_neg[t];
                if (gp != 0.0) {
                    axpy(grad->row(urow), gp, codes.row(prow), width);
                    axpy(grad->row(prow), gp, codes.row(urow), width);
                }
                if (gn != 0.0) {
                    axpy(grad->row(urow), gn, codes.row(nrow), width);
                    axpy(grad->row(nrow), gn, codes.row(urow), width);
                }
            }
        }
    };
    if (cfg.rank_final) add_rank(*fin, grad_final, out.rank_final);
    if (cfg.rank_initial) add_rank(h_initial, grad_initial, out.rank_initial);

    if (grad_final && !trace.bit_kept.empty()) {
        auto& vals = grad_final->data();
        for (std::size_t i = 0; i < vals.size(); ++i) {
            if (!trace.bit_kept[i]) vals[i] = 0.0;
        }
    }

    double sq = 0.0;
    for (double e : params.embed.data()) sq += e * e;
    out.l2 = cfg.lambda2 * sq;
    return out;
}

Matrix backward(const ForwardTrace& trace,
                const BipartiteGraph& graph,
                const Matrix& grad_final,
                const Matrix& grad_initial,
                const ModelParams& params,
                double lambda2,
                unsigned threads) {
    const std::size_t nodes = graph.num_nodes();
    const std::size_t width = params.embed.cols();
    if (trace.h.size() != params.layers + 1 || trace.layers.size() != params.layers) {
        throw std::invalid_argument("backward: trace does not match params");
    }
    if (grad_final.rows() != nodes || grad_final.cols() != width) {
        throw std::invalid_argument("backward: grad_final shape mismatch");
    }

    const std::uint32_t num_users = graph.num_users;
    Matrix g = grad_final;
    Matrix grad_s(nodes, width);
    for (std::size_t l = trace.layers.size(); l-- > 0;) {
        const LayerTrace& lt = trace.layers[l];
        const Matrix& h = trace.h[l];
        Matrix g_prev(nodes, width);

        // Elementwise chain through h_next = c (x) h, c = refine(d),
        // d = h (x) m, m = clamp(s). Clamp slope is 1 on the closed
        // interval, the ReLU corner at d = 0 takes slope 0.
        parallel_for(nodes, threads, [&](std::size_t begin, std::size_t end) {
            for (std::size_t r = begin; r < end; ++r) {
                const double* gn = g.row(r);
                const double* hr = h.row(r);
                const double* cr = lt.c.row(r);
                const double* dr = lt.d.row(r);
                const double* mr = lt.m.row(r);
                const double* sr = lt.s.row(r);
                double* gs = grad_s.row(r);
                double* gp = g_prev.row(r);
                for (std::size_t k = 0; k < width; ++k) {
                    double gc = gn[k] * hr[k];
                    double gh = gn[k] * cr[k];
                    double gd = dr[k] < 0.0 ? 2.0 * gc : 0.0;
                    gh += gd * mr[k];
                    double gm = gd * hr[k];
                    gs[k] = (sr[k] >= -1.0 && sr[k] <= 1.0) ? gm : 0.0;
                    gp[k] = gh;
                }
            }
        });

        // Transpose of s = (A+I)H with the node mask replayed: the self
        // term always flows back, a node's neighbor contributions only if
        // it was kept. A is symmetric so this is a per-row gather.
        const std::uint8_t* kept = lt.node_kept.empty() ? nullptr : lt.node_kept.data();
        parallel_for(nodes, threads, [&](std::size_t begin, std::size_t end) {
            for (std::size_t r = begin; r < end; ++r) {
                double* gp = g_prev.row(r);
                const double* gs_self = grad_s.row(r);
                for (std::size_t k = 0; k < width; ++k) gp[k] += gs_self[k];
                if (kept && !kept[r]) continue;
                auto neighbors =
                    r < num_users ? graph.items_of(static_cast<std::uint32_t>(r))
                                  : graph.users_of(static_cast<std::uint32_t>(r - num_users));
                for (std::uint32_t nb : neighbors) {
                    std::size_t nb_row = r < num_users ? std::size_t{num_users} + nb : nb;
                    const double* gs = grad_s.row(nb_row);
                    for (std::size_t k = 0; k < width; ++k) gp[k] += gs[k];
                }
            }
        });
        g = std::move(g_prev);
    }

    // Through H^(0) = tanh(beta * E), plus the direct initial-state term
    // and the regularizer gradient.
    Matrix grad_e(nodes, width);
    const auto& h0 = trace.h[0].data();
    const auto& gd = g.data();
    const auto& e = params.embed.data();
    const bool has_gi = !grad_initial.empty();
    auto& out = grad_e.data();
    for (std::size_t i = 0; i < out.size(); ++i) {
        double upstream = gd[i] + (has_gi ? grad_initial.data()[i] : 0.0);
        out[i] = upstream * params.beta * (1.0 - h0[i] * h0[i]) + 2.0 * lambda2 * e[i];
    }
    return grad_e;
}

namespace {

double loss_only(const ModelParams& params,
                 const BipartiteGraph& graph,
                 const TrainBatch& batch,
                 const LossConfig& cfg) {
    std::mt19937_64 unused(0);
    auto trace = forward(params, graph, DropoutConfig{}, unused);
    return total_loss(batch, trace, params, graph.num_users, cfg, nullptr, nullptr).total();
}

}  // namespace

GradCheckReport compare_gradient_fd(const Matrix& analytic,
                                    const ModelParams& params,
                                    const BipartiteGraph& graph,
                                    const TrainBatch& batch,
                                    const LossConfig& cfg,
                                    double epsilon,
                                    std::size_t max_coords,
                                    std::uint64_t subset_seed) {
    const std::size_t total = params.embed.rows() * params.embed.cols();
    std::vector<std::size_t> coords;
    if (total <= max_coords) {
        coords.resize(total);
        std::iota(coords.begin(), coords.end(), std::size_t{0});
    } else {
        std::mt19937_64 rng(subset_seed);
        std::unordered_set<std::size_t> chosen;
        std::uniform_int_distribution<std::size_t> pick(0, total - 1);
        while (chosen.size() < max_coords) chosen.insert(pick(rng));
        coords.assign(chosen.begin(), chosen.end());
        std::sort(coords.begin(), coords.end());
    }

    ModelParams work = params;
    GradCheckReport report;
    for (std::size_t c : coords) {
        double original = work.embed.data()[c];
        work.embed.data()[c] = original + epsilon;
        double plus = loss_only(work, graph, batch, cfg);
        work.embed.data()[c] = original - epsilon;
        double minus = loss_only(work, graph, batch, cfg);
        work.embed.data()[c] = original;

        double numeric = (plus - minus) / (2.0 * epsilon);
        double exact = analytic.data()[c];
        double denom = std::max({std::abs(exact), std::abs(numeric), 1e-8});
        report.max_rel_error = std::max(report.max_rel_error, std::abs(exact - numeric) / denom);
        ++report.coords_checked;
    }
    return report;
}

GradCheckReport finite_difference_check(const ModelParams& params,
                                        const BipartiteGraph& graph,
                                        const TrainBatch& batch,
                                        const LossConfig& cfg,
                                        double epsilon,
                                        std::size_t max_coords,
                                        std::uint64_t subset_seed) {
    std::mt19937_64 unused(0);
    auto trace = forward(params, graph, DropoutConfig{}, unused);
    Matrix grad_fin, grad_init;
    total_loss(batch, trace, params, graph.num_users, cfg, &grad_fin, &grad_init);
    Matrix analytic = backward(trace, graph, grad_fin, grad_init, params, cfg.lambda2);
    return compare_gradient_fd(analytic, params, graph, batch, cfg, epsilon, max_coords,
                               subset_seed);
}

double min_kink_distance(const ForwardTrace& trace,
                         const TrainBatch& batch,
                         const LossConfig& cfg,
                         std::uint32_t num_users) {
    double dist = std::numeric_limits<double>::infinity();
    for (const auto& layer : trace.layers) {
        for (double s : layer.s.data()) dist = std::min(dist, std::abs(std::abs(s) - 1.0));
        for (double d : layer.d.data()) dist = std::min(dist, std::abs(d));
    }
    auto hinge_distances = [&](const Matrix& codes) {
        const std::size_t width = codes.cols();
        for (const auto& trip : batch.triplets) {
            double sp = sigmoid(dot(codes.row(trip.user), codes.row(num_users + trip.pos_item), width));
            double sn = sigmoid(dot(codes.row(trip.user), codes.row(num_users + trip.neg_item), width));
            dist = std::min(dist, std::abs(-sp + sn + cfg.margin));
        }
    };
    if (cfg.rank_final) hinge_distances(trace.final());
    if (cfg.rank_initial) hinge_distances(trace.initial());
    return dist;
}

GradCheckInstance make_gradcheck_instance(std::uint32_t num_users,
                                          std::uint32_t num_items,
                                          std::uint32_t bits,
                                          std::uint32_t layers,
                                          const LossConfig& cfg,
                                          double epsilon,
                                          std::uint64_t seed,
                                          double margin_mult) {
    if (num_items < 2) throw std::invalid_argument("make_gradcheck_instance: need >= 2 items");
    std::mt19937_64 rng(seed);
    constexpr std::size_t kMaxAttempts = 200;

    for (std::size_t attempt = 0; attempt < kMaxAttempts; ++attempt) {
        // Random bipartite graph: every user 1..4 items (never all of
        // them), every item covered.
        std::vector<Interaction> edges;
        std::unordered_set<std::uint64_t> seen;
        auto add_edge = [&](std::uint32_t u, std::uint32_t i) {
            if (seen.insert((std::uint64_t{u} << 32) | i).second) edges.push_back({u, i, -1});
        };
        std::uniform_int_distribution<std::uint32_t> pick_item(0, num_items - 1);
        std::uniform_int_distribution<std::uint32_t> pick_user(0, num_users - 1);
        std::uint32_t max_deg = std::min(num_items - 1, std::uint32_t{4});
        std::uniform_int_distribution<std::uint32_t> pick_deg(1, max_deg);
        for (std::uint32_t u = 0; u < num_users; ++u) {
            std::uint32_t deg = pick_deg(rng);
            for (std::uint32_t d = 0; d < deg; ++d) add_edge(u, pick_item(rng));
        }
        std::vector<char> covered(num_items, 0);
        for (const auto& e : edges) covered[e.item] = 1;
        for (std::uint32_t i = 0; i < num_items; ++i) {
            if (!covered[i]) add_edge(pick_user(rng), i);
        }

        GradCheckInstance inst;
        inst.graph = build_graph(edges, num_users, num_items);
        inst.params = init_params(num_users, num_items, bits, layers, 1.0, rng);
        inst.batch.triplets =
            sample_triplets(inst.graph, std::max<std::size_t>(8, num_users), rng);
        fill_ce_negatives(inst.batch, inst.graph, cfg.negatives_per_positive, rng);
        inst.resamples = attempt;

        std::mt19937_64 unused(0);
        auto trace = forward(inst.params, inst.graph, DropoutConfig{}, unused);
        if (min_kink_distance(trace, inst.batch, cfg, num_users) > margin_mult * epsilon) {
            return inst;
        }
    }
    throw std::runtime_error("make_gradcheck_instance: no kink-free instance found");
}

// ---- training loop --------------------------------------------------------

namespace {

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

std::vector<std::vector<std::uint32_t>> per_user_items(std::span<const Interaction> part,
                                                       std::uint32_t num_users) {
    std::vector<std::vector<std::uint32_t>> lists(num_users);
    for (const auto& inter : part) lists[inter.user].push_back(inter.item);
    for (auto& row : lists) std::sort(row.begin(), row.end());
    return lists;
}

}  // namespace

std::string TrainReport::to_tsv(bool include_timing) const {
    std::string out = "epoch\tloss_total\tloss_cross\tloss_rank_initial\tloss_rank_final\tloss_l2";
    out += "\tval_hr@" + std::to_string(validation_k);
    out += "\tval_ndcg@" + std::to_string(validation_k);
    out += "\tbeta";
    if (include_timing) out += "\tseconds";
    out += "\n";
    for (const auto& e : epochs) {
        out += std::to_string(e.epoch);
        out += "\t" + format_double(e.loss.total());
        out += "\t" + format_double(e.loss.cross);
        out += "\t" + format_double(e.loss.rank_initial);
        out += "\t" + format_double(e.loss.rank_final);
        out += "\t" + format_double(e.loss.l2);
        out += "\t" + format_double(e.val_hr);
        out += "\t" + format_double(e.val_ndcg);
        out += "\t" + format_double(e.beta);
        if (include_timing) {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%.3f", e.seconds);
            out += "\t";
            out += buf;
        }
        out += "\n";
    }
    out += "# best_epoch\t" + std::to_string(best_epoch) + "\n";
    out += "# best_val_hr@" + std::to_string(validation_k) + "\t" + format_double(best_metric) +
           "\n";
    out += "# stop\t" + stop_reason + "\n";
    return out;
}

TrainResult train(const SplitDataset& split,
                  const BipartiteGraph& graph,
                  const TrainConfig& cfg,
                  TrainState* state,
                  const std::function<void(const TrainState&, const EpochStats&)>& after_epoch) {
    if (split.train.empty()) throw std::invalid_argument("train: empty training set");
    if (cfg.schedule.batch_size == 0) throw std::invalid_argument("train: batch_size must be >= 1");

    TrainState local;
    TrainState& st = state ? *state : local;
    if (st.params.embed.empty()) {
        st.rng = std::mt19937_64(cfg.seed);
        st.params = init_params(split.num_users, split.num_items, cfg.bits, cfg.layers,
                                cfg.schedule.beta0, st.rng);
        st.adam = init_adam(st.params.embed.rows(), st.params.embed.cols());
        st.best_embed = st.params.embed;
        st.best_beta = st.params.beta;
        st.epoch = 0;
        st.best_epoch = 0;
        st.best_metric = -1.0;
    }

    DropoutConfig dropout = cfg.dropout;
    dropout.enabled = dropout.node_ratio > 0.0 || dropout.bit_ratio > 0.0;

    const bool has_validation = !split.validation.empty();
    auto exclude = per_user_items(split.train, split.num_users);
    auto relevant = per_user_items(split.validation, split.num_users);

    TrainReport report;
    report.validation_k = cfg.schedule.validation_k;

    std::vector<std::size_t> order(split.train.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    for (std::uint32_t epoch = st.epoch + 1; epoch <= cfg.schedule.max_epochs; ++epoch) {
        auto t0 = std::chrono::steady_clock::now();
        std::shuffle(order.begin(), order.end(), st.rng);

        LossBreakdown epoch_loss;
        for (std::size_t begin = 0; begin < order.size(); begin += cfg.schedule.batch_size) {
            std::size_t end = std::min(order.size(), begin + cfg.schedule.batch_size);
            TrainBatch batch;
            batch.triplets.reserve(end - begin);
            for (std::size_t i = begin; i < end; ++i) {
                const auto& inter = split.train[order[i]];
                std::uint32_t neg = sample_negatives(graph, inter.user, 1, st.rng)[0];
                batch.triplets.push_back({inter.user, inter.item, neg});
            }
            fill_ce_negatives(batch, graph, cfg.loss.negatives_per_positive, st.rng);

            auto trace = forward(st.params, graph, dropout, st.rng, cfg.threads);
            Matrix grad_fin, grad_init;
            auto parts = total_loss(batch, trace, st.params, split.num_users, cfg.loss,
                                    &grad_fin, &grad_init);
            Matrix grad = backward(trace, graph, grad_fin, grad_init, st.params,
                                   cfg.loss.lambda2, cfg.threads);
            adam_step(st.adam, st.params.embed, grad, cfg.adam);

            epoch_loss.cross += parts.cross;
            epoch_loss.rank_initial += parts.rank_initial;
            epoch_loss.rank_final += parts.rank_final;
            epoch_loss.l2 += parts.l2;
        }

        if (cfg.schedule.beta_interval > 0 && epoch % cfg.schedule.beta_interval == 0) {
            st.params.beta =
                std::min(st.params.beta * cfg.schedule.beta_growth, cfg.schedule.beta_cap);
        }

        double val_hr = 0.0;
        double val_ndcg = 0.0;
        if (has_validation) {
            auto packed = inference_packed(st.params, graph, cfg.threads);
            auto hm = evaluate_holdout(packed, exclude, relevant, cfg.schedule.validation_k,
                                       false, cfg.threads);
            val_hr = hm.hr;
            val_ndcg = hm.ndcg;
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.loss = epoch_loss;
        stats.val_hr = val_hr;
        stats.val_ndcg = val_ndcg;
        stats.beta = st.params.beta;
        stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        report.epochs.push_back(stats);

        st.epoch = epoch;
        if (!has_validation || val_hr > st.best_metric) {
            st.best_metric = val_hr;
            st.best_epoch = epoch;
            st.best_embed = st.params.embed;
            st.best_beta = st.params.beta;
        }
        if (after_epoch) after_epoch(st, stats);

        if (has_validation && epoch - st.best_epoch >= cfg.schedule.patience) {
            report.stop_reason = "validation HR@" + std::to_string(cfg.schedule.validation_k) +
                                 " did not increase for " + std::to_string(cfg.schedule.patience) +
                                 " epochs";
            break;
        }
    }
    if (report.stop_reason.empty()) report.stop_reason = "reached max epochs";
    report.best_epoch = st.best_epoch;
    report.best_metric = has_validation ? st.best_metric : 0.0;

    TrainResult result;
    result.params.embed = st.best_embed;
    result.params.beta = st.best_beta;
    result.params.layers = cfg.layers;
    result.params.bits = cfg.bits;
    result.report = std::move(report);
    return result;
}

}  // namespace hamrec
