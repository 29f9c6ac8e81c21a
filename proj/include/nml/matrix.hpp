#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "nml/error.hpp"

namespace nml {

using index_t = std::size_t;

// Dense row-major matrix of doubles. Public operations keep every entry
// finite; producing a NaN/Inf raises numeric_error.
class Matrix {
public:
    Matrix() = default;
    Matrix(index_t rows, index_t cols); // zero-filled

    static Matrix zeros(index_t rows, index_t cols) { return Matrix(rows, cols); }
    static Matrix identity(index_t n);
    static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

    index_t rows() const { return rows_; }
    index_t cols() const { return cols_; }
    index_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(index_t i, index_t j) { return data_[i * cols_ + j]; }
    double operator()(index_t i, index_t j) const { return data_[i * cols_ + j]; }

    double* row(index_t i) { return data_.data() + i * cols_; }
    const double* row(index_t i) const { return data_.data() + i * cols_; }
    std::span<const double> row_span(index_t i) const { return {row(i), cols_}; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    void fill(double v);
    void set_zero() { fill(0.0); }
    bool all_finite() const;
    bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

    bool operator==(const Matrix& o) const = default;

private:
    index_t rows_ = 0;
    index_t cols_ = 0;
    std::vector<double> data_;
};

// a * b with a fixed i-k-j accumulation order: each output element gathers
// its terms in increasing k, independent of the kernel backend.
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);
Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
Matrix hadamard(const Matrix& a, const Matrix& b);
Matrix scaled(const Matrix& a, double s);
// out(i, j) = a(i, j) + r(0, j); r must be 1 x cols
Matrix add_row_broadcast(const Matrix& a, const Matrix& r);
// 1 x cols sums over rows
Matrix col_sums(const Matrix& a);
// in-place: a += s * b (shape match required)
void axpy_into(Matrix& a, double s, const Matrix& b);

void ensure_finite(const Matrix& m, const char* what);

} // namespace nml
