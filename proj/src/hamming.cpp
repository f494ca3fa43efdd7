#include "hamrec/hamming.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <queue>
#include <stdexcept>

#include "hamrec/detail/serial.hpp"

namespace hamrec {

std::vector<double> clamp(std::span<const double> x) {
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = clamp(x[i]);
    return out;
}

std::vector<double> refine_transform(std::span<const double> d) {
    std::vector<double> out(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) out[i] = refine_transform(d[i]);
    return out;
}

PackedCodes binarize(const Matrix& codes) {
    PackedCodes packed;
    packed.rows = codes.rows();
    packed.width = codes.cols();
    packed.words_per_row = words_for_width(packed.width);
    packed.bits.assign(packed.rows * packed.words_per_row, 0);
    for (std::size_t r = 0; r < packed.rows; ++r) {
        const double* src = codes.row(r);
        std::uint64_t* dst = packed.bits.data() + r * packed.words_per_row;
        for (std::size_t b = 0; b < packed.width; ++b) {
            if (src[b] >= 0.0) dst[b / 64] |= std::uint64_t{1} << (b % 64);
        }
    }
    return packed;
}

Matrix unpack(const PackedCodes& packed) {
    Matrix out(packed.rows, packed.width);
    for (std::size_t r = 0; r < packed.rows; ++r) {
        auto words = packed.row(r);
        double* dst = out.row(r);
        for (std::size_t b = 0; b < packed.width; ++b) {
            dst[b] = (words[b / 64] >> (b % 64)) & 1 ? 1.0 : -1.0;
        }
    }
    return out;
}

int hamming_similarity(std::span<const std::uint64_t> a,
                       std::span<const std::uint64_t> b,
                       std::size_t width) {
    if (a.size() != b.size() || a.size() != words_for_width(width)) {
        throw std::invalid_argument("hamming_similarity: width mismatch");
    }
    int differing = 0;
    for (std::size_t w = 0; w < a.size(); ++w) {
        differing += std::popcount(a[w] ^ b[w]);
    }
    return static_cast<int>(width) - 2 * differing;
}

namespace {

// Score-ascending, index-descending order so the heap top is the current
// worst of the kept k and ties resolve toward keeping lower indices.
struct WorseOnTop {
    bool operator()(const ScanHit& a, const ScanHit& b) const {
        if (a.score != b.score) return a.score > b.score;
        return a.item < b.item;
    }
};

}  // namespace

std::vector<ScanHit> top_k_scan(const PackedCodes& codes,
                                std::span<const std::uint64_t> query,
                                std::size_t item_rows_begin,
                                std::size_t num_items,
                                std::size_t k,
                                std::span<const std::uint32_t> exclude) {
    if (k == 0) throw std::invalid_argument("top_k_scan: k must be >= 1");
    if (query.size() != codes.words_per_row) {
        throw std::invalid_argument("top_k_scan: query width mismatch");
    }
    const std::size_t wpr = codes.words_per_row;
    const int width = static_cast<int>(codes.width);

    std::priority_queue<ScanHit, std::vector<ScanHit>, WorseOnTop> best;
    std::size_t ex = 0;
    for (std::uint32_t item = 0; item < num_items; ++item) {
        while (ex < exclude.size() && exclude[ex] < item) ++ex;
        if (ex < exclude.size() && exclude[ex] == item) continue;

        const std::uint64_t* row = codes.bits.data() + (item_rows_begin + item) * wpr;
        int differing = 0;
        for (std::size_t w = 0; w < wpr; ++w) differing += std::popcount(query[w] ^ row[w]);
        int score = width - 2 * differing;

        if (best.size() < k) {
            best.push({item, score});
        } else if (score > best.top().score ||
                   (score == best.top().score && item < best.top().item)) {
            best.pop();
            best.push({item, score});
        }
    }

    std::vector<ScanHit> ranked(best.size());
    for (std::size_t i = ranked.size(); i-- > 0;) {
        ranked[i] = best.top();
        best.pop();
    }
    return ranked;
}

std::vector<ScanHit> top_k_scan(const PackedCodes& codes,
                                std::size_t query_row,
                                std::size_t item_rows_begin,
                                std::size_t num_items,
                                std::size_t k,
                                std::span<const std::uint32_t> exclude) {
    return top_k_scan(codes, codes.row(query_row), item_rows_begin, num_items, k, exclude);
}

namespace {

using detail::get_string;
using detail::get_u16;
using detail::get_u64;
using detail::put_string;
using detail::put_u16;
using detail::put_u64;

constexpr char kMagic[4] = {'H', 'S', 'G', 'C'};
constexpr std::uint16_t kFormatVersion = 1;

}  // namespace

void save_code_file(const std::string& path, const CodeFile& file) {
    if (file.codes.rows != file.num_users + file.num_items) {
        throw std::invalid_argument("save_code_file: row count != N + M");
    }
    if (file.user_ids.size() != file.num_users || file.item_ids.size() != file.num_items) {
        throw std::invalid_argument("save_code_file: id map sizes disagree with N, M");
    }
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("save_code_file: cannot open " + path);

    os.write(kMagic, 4);
    put_u16(os, kFormatVersion);
    put_u64(os, file.num_users);
    put_u64(os, file.num_items);
    put_u64(os, file.codes.width);
    for (std::uint64_t w : file.codes.bits) put_u64(os, w);
    for (const auto& id : file.user_ids) put_string(os, id);
    for (const auto& id : file.item_ids) put_string(os, id);
    if (!os) throw std::runtime_error("save_code_file: write failed for " + path);
}

CodeFile load_code_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("load_code_file: cannot open " + path);

    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0) {
        throw std::runtime_error("load_code_file: bad magic in " + path);
    }
    std::uint16_t version = get_u16(is);
    if (version != kFormatVersion) {
        throw std::runtime_error("load_code_file: unsupported format version " +
                                 std::to_string(version));
    }

    CodeFile file;
    file.num_users = get_u64(is);
    file.num_items = get_u64(is);
    file.codes.width = get_u64(is);
    file.codes.rows = file.num_users + file.num_items;
    file.codes.words_per_row = words_for_width(file.codes.width);
    file.codes.bits.resize(file.codes.rows * file.codes.words_per_row);
    for (auto& w : file.codes.bits) w = get_u64(is);

    file.user_ids.reserve(file.num_users);
    for (std::uint64_t i = 0; i < file.num_users; ++i) file.user_ids.push_back(get_string(is));
    file.item_ids.reserve(file.num_items);
    for (std::uint64_t i = 0; i < file.num_items; ++i) file.item_ids.push_back(get_string(is));

    if (!is) throw std::runtime_error("load_code_file: truncated file " + path);
    return file;
}

}  // namespace hamrec
