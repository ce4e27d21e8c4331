#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace boolattn {

/// Dense row-major matrix of doubles. Entries are checked for finiteness on
/// construction and never change afterwards.
class Matrix {
 public:
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries);

  static Matrix zeros(std::size_t rows, std::size_t cols);
  static Matrix filled(std::size_t rows, std::size_t cols, double value);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<const double> data() const { return data_; }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(data_).subspan(r * cols_, cols_);
  }
  std::vector<double> column(std::size_t c) const;

  bool same_shape(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> data_;
};

/// Integer-valued matrix, used for rounded weight decodes.
struct IntMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<long long> entries;

  long long operator()(std::size_t r, std::size_t c) const { return entries[r * cols + c]; }
  friend bool operator==(const IntMatrix&, const IntMatrix&) = default;
};

/// Sum with pairwise (cascade) reduction. Error grows as O(log n) instead of
/// O(n) for naive accumulation.
double pairwise_sum(std::span<const double> values);

/// Column-wise softmax, S(j,m) = exp(W(j,m)) / sum_i exp(W(i,m)), stabilised by
/// subtracting each column's maximum.
Matrix softmax_columns(const Matrix& w);

double inf_norm_diff(std::span<const double> a, std::span<const double> b);

double frobenius_sq_diff(const Matrix& a, const Matrix& b);

/// Plain product a * b.
Matrix matmul(const Matrix& a, const Matrix& b);

/// S * 1 (row sums).
std::vector<double> row_sums(const Matrix& m);

}  // namespace boolattn
