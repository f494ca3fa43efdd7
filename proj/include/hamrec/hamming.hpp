#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hamrec/matrix.hpp"

namespace hamrec {

// Interval-limited clamp: the aggregation nonlinearity. For integer-sum
// inputs the output lands in {-1, 0, 1} and acts as a per-bit sign of the
// dominant value among a node and its neighbors.
inline double clamp(double x) {
    if (x > 1.0) return 1.0;
    if (x < -1.0) return -1.0;
    return x;
}

// Bit refinement transform c = -ReLU(-2d) + 1: maps d >= 0 to 1 and d < 0
// to 1 + 2d, so a disagreement flag of -1 survives while the "caught in
// the middle" value 0 is promoted to 1 (bit kept).
inline double refine_transform(double d) {
    return d < 0.0 ? 1.0 + 2.0 * d : 1.0;
}

std::vector<double> clamp(std::span<const double> x);
std::vector<double> refine_transform(std::span<const double> d);

// Sign-binarized codes packed into 64-bit words, LSB-first within each
// word. Bit = 1 encodes +1, bit = 0 encodes -1. Pad bits past `width` in
// the last word of every row are zero.
struct PackedCodes {
    std::size_t rows = 0;
    std::size_t width = 0;
    std::size_t words_per_row = 0;
    std::vector<std::uint64_t> bits;

    std::span<const std::uint64_t> row(std::size_t r) const {
        return {bits.data() + r * words_per_row, words_per_row};
    }
    std::span<std::uint64_t> row(std::size_t r) {
        return {bits.data() + r * words_per_row, words_per_row};
    }
};

inline std::size_t words_for_width(std::size_t width) { return (width + 63) / 64; }

// bit = 1 iff value >= 0 (ties binarize to +1).
PackedCodes binarize(const Matrix& codes);

// Inverse of binarize up to sign: returns the +-1 matrix the bits encode.
Matrix unpack(const PackedCodes& packed);

// Inner product h_a . h_b of two +-1 codes, computed as
// width - 2 * popcount(a XOR b). Integer in [-width, width].
int hamming_similarity(std::span<const std::uint64_t> a,
                       std::span<const std::uint64_t> b,
                       std::size_t width);

struct ScanHit {
    std::uint32_t item = 0;
    int score = 0;
};

// Exact top-k over item rows [item_rows_begin, item_rows_begin + num_items)
// against one query code. Ranked by score descending, ties by ascending
// item index. `exclude` must be sorted ascending; excluded items are never
// returned. If k exceeds the candidate count all candidates are returned.
std::vector<ScanHit> top_k_scan(const PackedCodes& codes,
                                std::span<const std::uint64_t> query,
                                std::size_t item_rows_begin,
                                std::size_t num_items,
                                std::size_t k,
                                std::span<const std::uint32_t> exclude);

std::vector<ScanHit> top_k_scan(const PackedCodes& codes,
                                std::size_t query_row,
                                std::size_t item_rows_begin,
                                std::size_t num_items,
                                std::size_t k,
                                std::span<const std::uint32_t> exclude);

// Packed-code container file: magic "HSGC", format version u16, then
// N, M, K as u64 little-endian, then (N+M) x words_per_row u64 LE words
// (user rows first), then N user ids and M item ids as u32-length-prefixed
// UTF-8 strings.
struct CodeFile {
    PackedCodes codes;
    std::uint64_t num_users = 0;
    std::uint64_t num_items = 0;
    std::vector<std::string> user_ids;
    std::vector<std::string> item_ids;
};

void save_code_file(const std::string& path, const CodeFile& file);
CodeFile load_code_file(const std::string& path);

}  // namespace hamrec
