#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace tkd {

// Dense row-major matrix of doubles. Deliberately minimal: just what the
// training kernels need.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  double* row(std::size_t r) { return data_.data() + r * cols_; }
  const double* row(std::size_t r) const { return data_.data() + r * cols_; }
  std::span<const double> row_span(std::size_t r) const { return {row(r), cols_}; }

  std::vector<double>& data() noexcept { return data_; }
  const std::vector<double>& data() const noexcept { return data_; }

  bool all_finite() const;

  // Rows of this matrix selected by `indices`, in the given order.
  Matrix gather_rows(std::span<const std::size_t> indices) const;

  bool operator==(const Matrix& other) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// out = a (m x k) * b (k x n)
Matrix matmul(const Matrix& a, const Matrix& b);
// out = a^T (k x m)^T * b (k x n)  ->  (m x n); used for weight gradients
Matrix matmul_at_b(const Matrix& a, const Matrix& b);
// out = a (m x k) * b^T (n x k)^T ->  (m x n); used for input gradients
Matrix matmul_a_bt(const Matrix& a, const Matrix& b);

}  // namespace tkd
