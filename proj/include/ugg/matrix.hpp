#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "ugg/errors.hpp"

namespace ugg {

// Dense row-major matrix of doubles. Small and value-semantic: instances in
// this library are C x N and N x N with N in the tens to low thousands.
// Element access is unchecked via operator(); at() throws IndexOutOfRange.
class Matrix {
  public:
    Matrix() = default;

    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix zeros(std::size_t rows, std::size_t cols) {
        return Matrix(rows, cols, 0.0);
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) {
        assert(r < rows_ && c < cols_);
        return data_[r * cols_ + c];
    }
    double operator()(std::size_t r, std::size_t c) const {
        assert(r < rows_ && c < cols_);
        return data_[r * cols_ + c];
    }

    double& at(std::size_t r, std::size_t c) {
        detail::require(r < rows_ && c < cols_, ErrorCode::kIndexOutOfRange,
                        "matrix index (" + std::to_string(r) + ", " + std::to_string(c) +
                            ") outside " + std::to_string(rows_) + " x " +
                            std::to_string(cols_));
        return data_[r * cols_ + c];
    }
    double at(std::size_t r, std::size_t c) const {
        return const_cast<Matrix*>(this)->at(r, c);
    }

    std::vector<double>& data() noexcept { return data_; }
    const std::vector<double>& data() const noexcept { return data_; }

    bool same_shape(const Matrix& other) const noexcept {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

    bool all_finite() const noexcept {
        for (double v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    bool is_symmetric() const noexcept {
        if (rows_ != cols_) return false;
        for (std::size_t r = 0; r < rows_; ++r)
            for (std::size_t c = r + 1; c < cols_; ++c)
                if ((*this)(r, c) != (*this)(c, r)) return false;
        return true;
    }

    friend bool operator==(const Matrix& a, const Matrix& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
    }

    // Largest absolute elementwise difference; shapes must match.
    friend double max_abs_diff(const Matrix& a, const Matrix& b) {
        detail::require(a.same_shape(b), ErrorCode::kDimensionMismatch,
                        "max_abs_diff on mismatched shapes");
        double worst = 0.0;
        for (std::size_t i = 0; i < a.data_.size(); ++i)
            worst = std::max(worst, std::abs(a.data_[i] - b.data_[i]));
        return worst;
    }

  private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

}  // namespace ugg
