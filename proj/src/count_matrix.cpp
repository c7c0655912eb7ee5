#include "hgpop/count_matrix.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include "hgpop/error.hpp"

namespace hgpop {

CountMatrix::CountMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, 0) {}

CountMatrix::CountMatrix(std::size_t rows, std::size_t cols, std::vector<Count> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
        throw ValidationError("CountMatrix: data size does not match shape");
    }
    if (std::any_of(data_.begin(), data_.end(), [](Count c) { return c < 0; })) {
        throw ValidationError("CountMatrix: counts must be non-negative");
    }
}

void CountMatrix::append_row(std::span<const Count> values) {
    if (rows_ == 0 && cols_ == 0) cols_ = values.size();
    if (values.size() != cols_) {
        throw ValidationError("CountMatrix::append_row: expected " + std::to_string(cols_) +
                              " columns, got " + std::to_string(values.size()));
    }
    if (std::any_of(values.begin(), values.end(), [](Count c) { return c < 0; })) {
        throw ValidationError("CountMatrix::append_row: counts must be non-negative");
    }
    data_.insert(data_.end(), values.begin(), values.end());
    ++rows_;
}

Count CountMatrix::row_total(std::size_t r) const {
    auto values = row(r);
    return std::accumulate(values.begin(), values.end(), Count{0});
}

std::vector<Count> CountMatrix::column_max() const {
    std::vector<Count> out(cols_, 0);
    for (std::size_t r = 0; r < rows_; ++r) {
        auto values = row(r);
        for (std::size_t c = 0; c < cols_; ++c) out[c] = std::max(out[c], values[c]);
    }
    return out;
}

WeightedRows compress_rows(const CountMatrix& m) {
    // ordered map keeps the output independent of hashing details
    std::map<std::vector<Count>, double> counts;
    for (std::size_t r = 0; r < m.rows(); ++r) {
        auto values = m.row(r);
        counts[std::vector<Count>(values.begin(), values.end())] += 1.0;
    }
    WeightedRows out{CountMatrix(0, m.cols()), {}};
    out.weights.reserve(counts.size());
    for (const auto& [row, weight] : counts) {
        out.rows.append_row(row);
        out.weights.push_back(weight);
    }
    return out;
}

}  // namespace hgpop
