#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace hgpop {

using Count = std::int64_t;

/// Dense row-major matrix of non-negative integer counts: one observation per
/// row, one category per column.
class CountMatrix {
public:
    CountMatrix() = default;
    CountMatrix(std::size_t rows, std::size_t cols);
    CountMatrix(std::size_t rows, std::size_t cols, std::vector<Count> data);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return rows_ == 0; }

    std::span<const Count> row(std::size_t r) const {
        return {data_.data() + r * cols_, cols_};
    }
    std::span<Count> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }

    Count operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    Count& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }

    const std::vector<Count>& data() const { return data_; }

    void append_row(std::span<const Count> values);

    Count row_total(std::size_t r) const;
    /// Elementwise maximum over rows; zeros when the matrix is empty.
    std::vector<Count> column_max() const;

    bool operator==(const CountMatrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<Count> data_;
};

/// Distinct rows of a matrix with their multiplicities. Likelihood sums over
/// a batch only depend on this compressed form, which is much smaller than
/// the batch when the number of categories is small.
struct WeightedRows {
    CountMatrix rows;
    std::vector<double> weights;
};

WeightedRows compress_rows(const CountMatrix& m);

}  // namespace hgpop
