#include "hamrec/checkpoint.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "hamrec/detail/serial.hpp"

namespace hamrec {

namespace {

using namespace detail;

constexpr char kMagic[4] = {'H', 'R', 'C', 'P'};
constexpr std::uint16_t kVersion = 1;

void put_matrix(std::ostream& os, const Matrix& m) {
    put_u64(os, m.rows());
    put_u64(os, m.cols());
    for (double v : m.data()) put_f64(os, v);
}

Matrix get_matrix(std::istream& is) {
    std::uint64_t rows = get_u64(is);
    std::uint64_t cols = get_u64(is);
    Matrix m(rows, cols);
    for (double& v : m.data()) v = get_f64(is);
    return m;
}

}  // namespace

void save_checkpoint(const std::string& path, const TrainState& state) {
    std::string tmp = path + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary);
        if (!os) throw std::runtime_error("save_checkpoint: cannot open " + tmp);
        os.write(kMagic, 4);
        put_u16(os, kVersion);
        put_u32(os, state.params.layers);
        put_u32(os, state.params.bits);
        put_f64(os, state.params.beta);
        put_u32(os, state.epoch);
        put_u32(os, state.best_epoch);
        put_f64(os, state.best_metric);
        put_f64(os, state.best_beta);
        put_u64(os, state.adam.step);
        std::ostringstream rng_text;
        rng_text << state.rng;
        put_string(os, rng_text.str());
        put_matrix(os, state.params.embed);
        put_matrix(os, state.best_embed);
        put_matrix(os, state.adam.first_moment);
        put_matrix(os, state.adam.second_moment);
        if (!os) throw std::runtime_error("save_checkpoint: write failed for " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        throw std::runtime_error("save_checkpoint: rename to " + path + " failed");
    }
}

TrainState load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("load_checkpoint: cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0) {
        throw std::runtime_error("load_checkpoint: bad magic in " + path);
    }
    std::uint16_t version = get_u16(is);
    if (version != kVersion) {
        throw std::runtime_error("load_checkpoint: unsupported version " +
                                 std::to_string(version));
    }

    TrainState state;
    state.params.layers = get_u32(is);
    state.params.bits = get_u32(is);
    state.params.beta = get_f64(is);
    state.epoch = get_u32(is);
    state.best_epoch = get_u32(is);
    state.best_metric = get_f64(is);
    state.best_beta = get_f64(is);
    state.adam.step = get_u64(is);
    std::istringstream rng_text(get_string(is));
    rng_text >> state.rng;
    state.params.embed = get_matrix(is);
    state.best_embed = get_matrix(is);
    state.adam.first_moment = get_matrix(is);
    state.adam.second_moment = get_matrix(is);
    if (!is) throw std::runtime_error("load_checkpoint: truncated file " + path);
    return state;
}

}  // namespace hamrec
