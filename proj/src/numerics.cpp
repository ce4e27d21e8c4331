#include "boolattn/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace boolattn {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
    : rows_(rows), cols_(cols), data_(std::move(entries)) {
  if (rows_ == 0 || cols_ == 0) {
    throw std::invalid_argument("Matrix: rows and cols must be >= 1");
  }
  if (data_.size() != rows_ * cols_) {
    throw std::invalid_argument("Matrix: expected " + std::to_string(rows_ * cols_) +
                                " entries, got " + std::to_string(data_.size()));
  }
  for (double v : data_) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("Matrix: non-finite entry");
    }
  }
}

Matrix Matrix::zeros(std::size_t rows, std::size_t cols) { return filled(rows, cols, 0.0); }

Matrix Matrix::filled(std::size_t rows, std::size_t cols, double value) {
  return Matrix(rows, cols, std::vector<double>(rows * cols, value));
}

std::vector<double> Matrix::column(std::size_t c) const {
  std::vector<double> out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out[r] = data_[r * cols_ + c];
  return out;
}

double pairwise_sum(std::span<const double> values) {
  constexpr std::size_t kBlock = 16;
  if (values.size() <= kBlock) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

Matrix softmax_columns(const Matrix& w) {
  const std::size_t d = w.rows();
  const std::size_t t = w.cols();
  std::vector<double> out(d * t);
  std::vector<double> col(d);
  for (std::size_t m = 0; m < t; ++m) {
    double mx = w(0, m);
    for (std::size_t j = 1; j < d; ++j) mx = std::max(mx, w(j, m));
    for (std::size_t j = 0; j < d; ++j) col[j] = std::exp(w(j, m) - mx);
    const double z = pairwise_sum(col);
    for (std::size_t j = 0; j < d; ++j) out[j * t + m] = col[j] / z;
  }
  return Matrix(d, t, std::move(out));
}

double inf_norm_diff(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("inf_norm_diff: length mismatch");
  }
  double best = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) best = std::max(best, std::abs(a[i] - b[i]));
  return best;
}

double frobenius_sq_diff(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) {
    throw std::invalid_argument("frobenius_sq_diff: shape mismatch");
  }
  std::vector<double> sq(a.data().size());
  for (std::size_t i = 0; i < sq.size(); ++i) {
    const double diff = a.data()[i] - b.data()[i];
    sq[i] = diff * diff;
  }
  return pairwise_sum(sq);
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw std::invalid_argument("matmul: inner dimensions differ");
  }
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  std::vector<double> out(n * m, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a(i, p);
      if (aip == 0.0) continue;
      for (std::size_t j = 0; j < m; ++j) out[i * m + j] += aip * b(p, j);
    }
  }
  return Matrix(n, m, std::move(out));
}

std::vector<double> row_sums(const Matrix& m) {
  std::vector<double> out(m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) out[r] = pairwise_sum(m.row(r));
  return out;
}

}  // namespace boolattn
