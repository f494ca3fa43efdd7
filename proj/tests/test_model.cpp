#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "hamrec/model.hpp"

using namespace hamrec;

namespace {

BipartiteGraph random_graph(std::uint32_t nu, std::uint32_t ni, double density,
                            std::mt19937_64& rng) {
    std::set<std::pair<std::uint32_t, std::uint32_t>> seen;
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    for (std::uint32_t u = 0; u < nu; ++u) {
        for (std::uint32_t i = 0; i < ni; ++i) {
            if (coin(rng) < density) seen.insert({u, i});
        }
    }
    if (seen.empty()) seen.insert({0, 0});
    std::vector<Interaction> edges;
    for (auto [u, i] : seen) edges.push_back({u, i, -1});
    return build_graph(edges, nu, ni);
}

Matrix random_signs(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
    Matrix m(rows, cols);
    std::bernoulli_distribution coin(0.5);
    for (double& v : m.data()) v = coin(rng) ? 1.0 : -1.0;
    return m;
}

Matrix random_unit(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
    Matrix m(rows, cols);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    for (double& v : m.data()) v = unit(rng);
    return m;
}

// Majority-vote reference: the new bit is the dominant sign among the node
// and its neighbors, the node's own bit on exact ties.
double majority_oracle(double self, const std::vector<double>& neighbor_bits) {
    int plus = self > 0 ? 1 : 0;
    int minus = self < 0 ? 1 : 0;
    for (double b : neighbor_bits) {
        if (b > 0) ++plus;
        else ++minus;
    }
    if (plus > minus) return 1.0;
    if (minus > plus) return -1.0;
    return self;
}

}  // namespace

TEST_CASE("initial codes are tanh(beta * E)") {
    ModelParams params;
    params.bits = 3;
    params.layers = 1;
    params.embed = Matrix(2, 3);
    params.embed(0, 0) = 0.0;
    params.embed(0, 1) = 10.0;
    params.embed(0, 2) = -0.25;
    params.beta = 10.0;
    auto h = initial_codes(params);
    CHECK(h(0, 0) == 0.0);
    CHECK(h(0, 1) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(h(0, 2) == std::tanh(-2.5));

    // |code| is non-decreasing in beta
    ModelParams doubled = params;
    doubled.beta = 20.0;
    auto h2 = initial_codes(doubled);
    for (std::size_t i = 0; i < h.data().size(); ++i) {
        CHECK(std::abs(h2.data()[i]) >= std::abs(h.data()[i]));
    }

    params.embed(1, 1) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS((void)initial_codes(params), std::runtime_error);
}

TEST_CASE("propagate_node follows the aggregation/refinement chain") {
    // minority bit flips to majority
    std::vector<double> self = {-1.0, 1.0};
    std::vector<double> n1 = {1.0, 1.0};
    std::vector<double> n2 = {1.0, -1.0};
    auto step = propagate_node(self, {std::span<const double>(n1), std::span<const double>(n2)});
    CHECK(step.s == std::vector<double>{1.0, 1.0});
    CHECK(step.m == std::vector<double>{1.0, 1.0});
    CHECK(step.d == std::vector<double>{-1.0, 1.0});
    CHECK(step.c == std::vector<double>{-1.0, 1.0});
    CHECK(step.h_next == std::vector<double>{1.0, 1.0});

    // balanced neighbors, self breaks the tie toward itself
    std::vector<double> self2 = {1.0};
    std::vector<double> p = {1.0}, n = {-1.0};
    auto retained = propagate_node(self2, {std::span<const double>(p), std::span<const double>(n)});
    CHECK(retained.s == std::vector<double>{1.0});
    CHECK(retained.h_next == std::vector<double>{1.0});

    // caught in the middle: s = 0 leaves the bit unchanged
    auto middle = propagate_node(self2, {std::span<const double>(n)});
    CHECK(middle.s == std::vector<double>{0.0});
    CHECK(middle.m == std::vector<double>{0.0});
    CHECK(middle.d == std::vector<double>{0.0});
    CHECK(middle.c == std::vector<double>{1.0});
    CHECK(middle.h_next == std::vector<double>{1.0});

    std::vector<double> bad = {1.0, 2.0, 3.0};
    CHECK_THROWS_AS((void)propagate_node(self2, {std::span<const double>(bad)}),
                    std::invalid_argument);
}

TEST_CASE("isolated nodes are fixed points of propagation") {
    // a graph with no edges at all, built directly
    BipartiteGraph g;
    g.num_users = 3;
    g.num_items = 2;
    g.user_offsets.assign(4, 0);
    g.item_offsets.assign(3, 0);

    std::mt19937_64 rng(21);
    Matrix h = random_unit(5, 4, rng);
    auto [next, trace] = propagate_matrix(h, g);
    for (std::size_t i = 0; i < h.data().size(); ++i) {
        CHECK(next.data()[i] == h.data()[i]);
    }
}

TEST_CASE("matrix form equals the node form row for row") {
    std::mt19937_64 rng(22);
    for (int trial = 0; trial < 30; ++trial) {
        std::uint32_t nu = 1 + rng() % 14, ni = 1 + rng() % 14;
        auto g = random_graph(nu, ni, 0.25, rng);
        std::size_t width = 1 + rng() % 16;
        Matrix h = random_unit(nu + ni, width, rng);
        auto [next, trace] = propagate_matrix(h, g, {}, 2);

        for (std::uint32_t r = 0; r < nu + ni; ++r) {
            std::vector<std::span<const double>> nbrs;
            auto ids = r < nu ? g.items_of(r) : g.users_of(r - nu);
            for (auto nb : ids) {
                nbrs.push_back(h.row_span(r < nu ? nu + nb : nb));
            }
            auto step = propagate_node(h.row_span(r), nbrs);
            for (std::size_t k = 0; k < width; ++k) {
                CHECK(next(r, k) == step.h_next[k]);  // identical summation order
                CHECK(trace.s(r, k) == step.s[k]);
                CHECK(trace.m(r, k) == step.m[k]);
                CHECK(trace.d(r, k) == step.d[k]);
                CHECK(trace.c(r, k) == step.c[k]);
            }
        }
    }
}

TEST_CASE("propagation of +-1 codes is closed and majority-driven") {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 200; ++trial) {
        std::uint32_t nu = 1 + rng() % 8, ni = 1 + rng() % 8;
        auto g = random_graph(nu, ni, 0.4, rng);
        std::size_t width = 1 + rng() % 8;
        Matrix h = random_signs(nu + ni, width, rng);
        auto [next, trace] = propagate_matrix(h, g);
        for (std::uint32_t r = 0; r < nu + ni; ++r) {
            auto ids = r < nu ? g.items_of(r) : g.users_of(r - nu);
            for (std::size_t k = 0; k < width; ++k) {
                CHECK((next(r, k) == 1.0 || next(r, k) == -1.0));
                std::vector<double> nbr_bits;
                for (auto nb : ids) nbr_bits.push_back(h(r < nu ? nu + nb : nb, k));
                CHECK(next(r, k) == majority_oracle(h(r, k), nbr_bits));
            }
        }
    }
}

TEST_CASE("propagation commutes with consistent relabeling") {
    std::mt19937_64 rng(24);
    std::uint32_t nu = 6, ni = 5;
    auto g = random_graph(nu, ni, 0.4, rng);
    Matrix h = random_unit(nu + ni, 6, rng);

    std::vector<std::uint32_t> uperm(nu), iperm(ni);
    std::iota(uperm.begin(), uperm.end(), 0);
    std::iota(iperm.begin(), iperm.end(), 0);
    std::shuffle(uperm.begin(), uperm.end(), rng);
    std::shuffle(iperm.begin(), iperm.end(), rng);

    std::vector<Interaction> relabeled;
    for (std::uint32_t u = 0; u < nu; ++u) {
        for (auto i : g.items_of(u)) relabeled.push_back({uperm[u], iperm[i], -1});
    }
    auto g2 = build_graph(relabeled, nu, ni);
    Matrix h2(nu + ni, 6);
    for (std::uint32_t u = 0; u < nu; ++u) {
        std::copy(h.row(u), h.row(u) + 6, h2.row(uperm[u]));
    }
    for (std::uint32_t i = 0; i < ni; ++i) {
        std::copy(h.row(nu + i), h.row(nu + i) + 6, h2.row(nu + iperm[i]));
    }

    auto next = propagate_matrix(h, g).first;
    auto next2 = propagate_matrix(h2, g2).first;
    for (std::uint32_t u = 0; u < nu; ++u) {
        for (std::size_t k = 0; k < 6; ++k) CHECK(next(u, k) == next2(uperm[u], k));
    }
    for (std::uint32_t i = 0; i < ni; ++i) {
        for (std::size_t k = 0; k < 6; ++k) CHECK(next(nu + i, k) == next2(nu + iperm[i], k));
    }
}

TEST_CASE("node dropout drops exactly floor(ratio * nodes), never the self term") {
    std::mt19937_64 rng(25);
    auto none = node_dropout_mask(10, 0.0, rng);
    CHECK(std::count(none.begin(), none.end(), 1) == 10);

    for (double ratio : {0.1, 0.37, 0.5, 0.9}) {
        auto mask = node_dropout_mask(100, ratio, rng);
        auto dropped = std::count(mask.begin(), mask.end(), 0);
        CHECK(dropped == std::uint32_t(ratio * 100));
    }

    // all neighbors of a node dropped -> identity update for that node
    auto g = random_graph(4, 4, 0.6, rng);
    Matrix h = random_unit(8, 3, rng);
    std::vector<std::uint8_t> kept(8, 0);
    kept[0] = 1;  // user 0 survives, every potential neighbor is dropped
    auto [next, trace] = propagate_matrix(h, g, kept);
    for (std::size_t k = 0; k < 3; ++k) CHECK(next(0, k) == h(0, k));
}

TEST_CASE("bit dropout keeps roughly 1 - p of the entries") {
    std::mt19937_64 rng(26);
    auto none = bit_dropout_mask(10, 8, 0.0, rng);
    CHECK(std::count(none.begin(), none.end(), 1) == 80);

    double p = 0.3;
    std::size_t n = 200 * 64;
    auto mask = bit_dropout_mask(200, 64, p, rng);
    double kept = double(std::count(mask.begin(), mask.end(), 1));
    double expect = (1.0 - p) * double(n);
    double sigma = std::sqrt(p * (1.0 - p) * double(n));
    CHECK(std::abs(kept - expect) <= 3.0 * sigma);
}

TEST_CASE("forward composes layers and records a replayable trace") {
    std::mt19937_64 rng(27);
    auto g = random_graph(6, 6, 0.4, rng);
    auto params = init_params(6, 6, 8, 1, 1.0, rng);

    std::mt19937_64 fwd_rng(1);
    auto trace1 = forward(params, g, DropoutConfig{}, fwd_rng);
    auto direct = propagate_matrix(initial_codes(params), g).first;
    REQUIRE(trace1.h.size() == 2);
    CHECK(trace1.final().data() == direct.data());  // L=1 is one step

    // no dropout: repeated calls agree exactly
    std::mt19937_64 fwd_rng2(99);
    auto trace1b = forward(params, g, DropoutConfig{}, fwd_rng2);
    CHECK(trace1.final().data() == trace1b.final().data());

    // L=2 final codes factor as c1 (x) c0 (x) h0
    params.layers = 2;
    std::mt19937_64 fwd_rng3(7);
    auto trace2 = forward(params, g, DropoutConfig{}, fwd_rng3);
    REQUIRE(trace2.layers.size() == 2);
    for (std::size_t i = 0; i < trace2.final().data().size(); ++i) {
        double expect = trace2.layers[1].c.data()[i] * trace2.layers[0].c.data()[i] *
                        trace2.h[0].data()[i];
        CHECK(trace2.final().data()[i] == doctest::Approx(expect).epsilon(1e-15));
    }

    // replaying the stored masks reproduces the stored tensors exactly
    DropoutConfig drop;
    drop.enabled = true;
    drop.node_ratio = 0.3;
    drop.bit_ratio = 0.2;
    std::mt19937_64 fwd_rng4(11);
    auto traced = forward(params, g, drop, fwd_rng4);
    Matrix h = traced.h[0];
    for (std::size_t l = 0; l < traced.layers.size(); ++l) {
        auto [replay, lt] = propagate_matrix(h, g, traced.layers[l].node_kept);
        CHECK(replay.data() == traced.h[l + 1].data());
        CHECK(lt.s.data() == traced.layers[l].s.data());
        CHECK(lt.c.data() == traced.layers[l].c.data());
        h = std::move(replay);
    }
}

TEST_CASE("predict is the inner product; inference codes are hard signs") {
    std::vector<double> a(64, 1.0), b(64, 1.0);
    CHECK(predict(a, b) == 64.0);
    for (std::size_t k = 0; k < 32; ++k) b[k] = -1.0;
    CHECK(predict(a, b) == 0.0);

    std::mt19937_64 rng(28);
    auto g = random_graph(5, 7, 0.3, rng);
    auto params = init_params(5, 7, 16, 2, 1.0, rng);
    auto codes = inference_codes(params, g);
    for (double v : codes.data()) CHECK((v == 1.0 || v == -1.0));

    // packing keeps layout: row r of the packed codes is node r
    auto packed = inference_packed(params, g);
    auto round = unpack(packed);
    CHECK(round.data() == codes.data());
}

TEST_CASE("xavier initialization respects the fan bound") {
    std::mt19937_64 rng(29);
    auto params = init_params(40, 25, 16, 2, 1.0, rng);
    double bound = std::sqrt(6.0 / (65.0 + 16.0));
    for (double v : params.embed.data()) {
        CHECK(std::abs(v) <= bound);
    }
    // bound is actually approached
    double max_abs = 0.0;
    for (double v : params.embed.data()) max_abs = std::max(max_abs, std::abs(v));
    CHECK(max_abs > 0.8 * bound);
}
