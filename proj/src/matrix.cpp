#include "matrix.hpp"

#include <cmath>

#include "error.hpp"

namespace tkd {

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix m;
  m.rows_ = rows.size();
  m.cols_ = rows.size() ? rows.begin()->size() : 0;
  m.data_.reserve(m.rows_ * m.cols_);
  for (const auto& r : rows) {
    require(r.size() == m.cols_, "matrix", "ragged initializer rows");
    m.data_.insert(m.data_.end(), r.begin(), r.end());
  }
  return m;
}

bool Matrix::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Matrix Matrix::gather_rows(std::span<const std::size_t> indices) const {
  Matrix out(indices.size(), cols_);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const double* src = row(indices[i]);
    double* dst = out.row(i);
    for (std::size_t c = 0; c < cols_; ++c) dst[c] = src[c];
  }
  return out;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.rows(), "matrix", "matmul shape mismatch");
  Matrix out(a.rows(), b.cols());
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a.row(i);
    double* orow = out.row(i);
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      if (av == 0.0) continue;
      const double* brow = b.row(p);
      for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
  return out;
}

Matrix matmul_at_b(const Matrix& a, const Matrix& b) {
  require(a.rows() == b.rows(), "matrix", "matmul shape mismatch");
  Matrix out(a.cols(), b.cols());
  const std::size_t k = a.rows(), m = a.cols(), n = b.cols();
  for (std::size_t p = 0; p < k; ++p) {
    const double* arow = a.row(p);
    const double* brow = b.row(p);
    for (std::size_t i = 0; i < m; ++i) {
      const double av = arow[i];
      if (av == 0.0) continue;
      double* orow = out.row(i);
      for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
  return out;
}

Matrix matmul_a_bt(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.cols(), "matrix", "matmul shape mismatch");
  Matrix out(a.rows(), b.rows());
  const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a.row(i);
    double* orow = out.row(i);
    for (std::size_t j = 0; j < n; ++j) {
      const double* brow = b.row(j);
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
      orow[j] = acc;
    }
  }
  return out;
}

}  // namespace tkd
