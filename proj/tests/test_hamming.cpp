#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <random>

#include "hamrec/hamming.hpp"

using namespace hamrec;

namespace {

// Independent reference: score every candidate, full sort, truncate.
std::vector<ScanHit> full_sort_oracle(const PackedCodes& codes,
                                      std::span<const std::uint64_t> query,
                                      std::size_t item_begin,
                                      std::size_t num_items,
                                      std::size_t k,
                                      std::span<const std::uint32_t> exclude) {
    std::vector<ScanHit> all;
    for (std::uint32_t item = 0; item < num_items; ++item) {
        if (std::binary_search(exclude.begin(), exclude.end(), item)) continue;
        int score = hamming_similarity(query, codes.row(item_begin + item), codes.width);
        all.push_back({item, score});
    }
    std::sort(all.begin(), all.end(), [](const ScanHit& a, const ScanHit& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.item < b.item;
    });
    if (all.size() > k) all.resize(k);
    return all;
}

PackedCodes random_codes(std::size_t rows, std::size_t width, std::mt19937_64& rng) {
    Matrix m(rows, width);
    std::bernoulli_distribution coin(0.5);
    for (double& v : m.data()) v = coin(rng) ? 1.0 : -1.0;
    return binarize(m);
}

}  // namespace

TEST_CASE("clamp saturates outside the unit interval") {
    CHECK(clamp(3.0) == 1.0);
    CHECK(clamp(-0.5) == -0.5);
    CHECK(clamp(-4.0) == -1.0);
    CHECK(clamp(1.0) == 1.0);
    CHECK(clamp(-1.0) == -1.0);

    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> wide(-5.0, 5.0);
    for (int i = 0; i < 1000; ++i) {
        double x = wide(rng);
        CHECK(clamp(clamp(x)) == clamp(x));  // idempotent
        CHECK(clamp(x) >= -1.0);
        CHECK(clamp(x) <= 1.0);
    }
}

TEST_CASE("refine_transform keeps agreements and zero, flags disagreements") {
    CHECK(refine_transform(1.0) == 1.0);
    CHECK(refine_transform(0.0) == 1.0);  // caught-in-the-middle bit is kept
    CHECK(refine_transform(-1.0) == -1.0);

    // ternary inputs stay binary
    for (double d : {-1.0, 0.0, 1.0}) {
        double c = refine_transform(d);
        CHECK((c == 1.0 || c == -1.0));
    }
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    for (int i = 0; i < 1000; ++i) {
        double d = unit(rng);
        double c = refine_transform(d);
        CHECK(c >= -1.0);
        CHECK(c <= 1.0);
        CHECK(c == (d < 0.0 ? 1.0 + 2.0 * d : 1.0));
    }
}

TEST_CASE("binarize packs the sign with ties to +1") {
    Matrix m(1, 4);
    m(0, 0) = 0.3;
    m(0, 1) = -0.7;
    m(0, 2) = 0.0;
    m(0, 3) = -0.1;
    auto packed = binarize(m);
    CHECK(packed.words_per_row == 1);
    CHECK(packed.row(0)[0] == 0b0101);

    Matrix ones(1, 64, 1.0);
    CHECK(binarize(ones).row(0)[0] == ~std::uint64_t{0});

    Matrix wide(1, 65, 1.0);
    auto p65 = binarize(wide);
    CHECK(p65.words_per_row == 2);
    CHECK(p65.row(0)[1] == 1);  // only bit 64 set, pads zero
}

TEST_CASE("unpack(binarize) is the elementwise sign, zero mapping to +1") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    for (std::size_t width : {1u, 63u, 64u, 65u, 130u}) {
        Matrix m(4, width);
        for (double& v : m.data()) v = unit(rng);
        m.data()[0] = 0.0;
        Matrix round = unpack(binarize(m));
        for (std::size_t i = 0; i < m.data().size(); ++i) {
            CHECK(round.data()[i] == (m.data()[i] >= 0.0 ? 1.0 : -1.0));
        }
    }
}

TEST_CASE("hamming_similarity equals width - 2 * differing bits") {
    Matrix m(3, 64, 1.0);
    for (std::size_t k = 0; k < 64; ++k) m(1, k) = -1.0;  // complement
    m(2, 5) = -1.0;                                       // one bit off
    auto p = binarize(m);
    CHECK(hamming_similarity(p.row(0), p.row(0), 64) == 64);
    CHECK(hamming_similarity(p.row(0), p.row(2), 64) == 62);
    CHECK(hamming_similarity(p.row(0), p.row(1), 64) == -64);

    PackedCodes narrow = binarize(Matrix(1, 32, 1.0));
    CHECK_THROWS_AS((void)hamming_similarity(p.row(0), narrow.row(0), 64),
                    std::invalid_argument);
}

TEST_CASE("packed score equals the real inner product of +-1 codes") {
    std::mt19937_64 rng(4);
    for (std::size_t width : {1u, 63u, 64u, 65u, 128u, 256u}) {
        Matrix m(64, width);
        std::bernoulli_distribution coin(0.5);
        for (double& v : m.data()) v = coin(rng) ? 1.0 : -1.0;
        auto packed = binarize(m);
        for (int trial = 0; trial < 200; ++trial) {
            std::uniform_int_distribution<std::size_t> pick(0, 63);
            std::size_t a = pick(rng);
            std::size_t b = pick(rng);
            double dot = 0.0;
            for (std::size_t k = 0; k < width; ++k) dot += m(a, k) * m(b, k);
            CHECK(hamming_similarity(packed.row(a), packed.row(b), width) == int(dot));
        }
    }
}

TEST_CASE("top_k_scan ranks by score then ascending index") {
    // query all +1; item0 differs in 1 bit (62), item1 complement (-64),
    // item2 identical (64)
    Matrix m(4, 64, 1.0);
    m(1, 7) = -1.0;
    for (std::size_t k = 0; k < 64; ++k) m(2, k) = -1.0;
    auto codes = binarize(m);

    auto top = top_k_scan(codes, 0, 1, 3, 2, {});
    REQUIRE(top.size() == 2);
    CHECK(top[0].item == 2);
    CHECK(top[0].score == 64);
    CHECK(top[1].item == 0);
    CHECK(top[1].score == 62);

    std::vector<std::uint32_t> exclude = {2};
    auto promoted = top_k_scan(codes, 0, 1, 3, 2, exclude);
    REQUIRE(promoted.size() == 2);
    CHECK(promoted[0].item == 0);
    CHECK(promoted[1].item == 1);

    // k larger than candidate count returns everything ranked
    auto all = top_k_scan(codes, 0, 1, 3, 10, exclude);
    CHECK(all.size() == 2);
}

TEST_CASE("top_k_scan matches the full-sort oracle on random instances") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        std::size_t width = 1 + rng() % 100;
        std::size_t num_items = 1 + rng() % 200;
        // few distinct rows force heavy score ties
        auto codes = random_codes(num_items + 1, width, rng);
        if (trial % 2 == 0) {
            for (std::size_t r = 2; r < num_items + 1; ++r) {
                std::copy(codes.row(r % 2).begin(), codes.row(r % 2).end(),
                          codes.row(r).begin());
            }
        }
        std::vector<std::uint32_t> exclude;
        for (std::uint32_t i = 0; i < num_items; ++i) {
            if (rng() % 4 == 0) exclude.push_back(i);
        }
        std::size_t k = 1 + rng() % (num_items + 3);
        auto got = top_k_scan(codes, 0, 1, num_items, k, exclude);
        auto want = full_sort_oracle(codes, codes.row(0), 1, num_items, k, exclude);
        REQUIRE(got.size() == want.size());
        for (std::size_t i = 0; i < got.size(); ++i) {
            CHECK(got[i].item == want[i].item);
            CHECK(got[i].score == want[i].score);
        }
    }
}

TEST_CASE("code file round-trips bit-exactly") {
    std::mt19937_64 rng(6);
    CodeFile file;
    file.num_users = 3;
    file.num_items = 5;
    file.codes = random_codes(8, 65, rng);
    file.user_ids = {"u1", "user-two", "3"};
    file.item_ids = {"a", "b", "c", "d", "item with spaces"};

    std::string path = "codes_roundtrip.bin";
    save_code_file(path, file);

    FILE* raw = std::fopen(path.c_str(), "rb");
    REQUIRE(raw != nullptr);
    char magic[4];
    REQUIRE(std::fread(magic, 1, 4, raw) == 4);
    std::fclose(raw);
    CHECK(std::string(magic, 4) == "HSGC");

    auto loaded = load_code_file(path);
    CHECK(loaded.num_users == file.num_users);
    CHECK(loaded.num_items == file.num_items);
    CHECK(loaded.codes.width == file.codes.width);
    CHECK(loaded.codes.bits == file.codes.bits);
    CHECK(loaded.user_ids == file.user_ids);
    CHECK(loaded.item_ids == file.item_ids);
    std::remove(path.c_str());

    CHECK_THROWS_AS((void)load_code_file("does_not_exist.bin"), std::runtime_error);
}
