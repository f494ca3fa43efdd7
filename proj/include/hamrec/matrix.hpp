#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <thread>
#include <vector>

namespace hamrec {

// Dense row-major matrix of doubles. Wherever a matrix spans both node
// sets, rows 0..N-1 are users and rows N..N+M-1 are items.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double value = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, value) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return data_.empty(); }

    double* row(std::size_t r) { return data_.data() + r * cols_; }
    const double* row(std::size_t r) const { return data_.data() + r * cols_; }

    std::span<double> row_span(std::size_t r) { return {row(r), cols_}; }
    std::span<const double> row_span(std::size_t r) const { return {row(r), cols_}; }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool same_shape(const Matrix& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline bool all_finite(const Matrix& m) {
    for (double v : m.data()) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

inline unsigned resolve_threads(unsigned requested) {
    if (requested != 0) return requested;
    unsigned hw = std::thread::hardware_concurrency();
    return hw ? hw : 1;
}

// Static range partition; fn(begin, end) runs on [begin, end). Work per
// index must be independent so any thread count gives identical results.
template <typename Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
    threads = resolve_threads(threads);
    if (threads <= 1 || n < 1024) {
        fn(std::size_t{0}, n);
        return;
    }
    std::size_t chunk = (n + threads - 1) / threads;
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) {
        std::size_t begin = std::min(n, t * chunk);
        std::size_t end = std::min(n, begin + chunk);
        if (begin == end) break;
        pool.emplace_back([begin, end, &fn] { fn(begin, end); });
    }
    for (auto& th : pool) th.join();
}

}  // namespace hamrec
