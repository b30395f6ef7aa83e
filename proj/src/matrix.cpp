#include "bmm/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace bmm {

MatrixView MatrixView::columns(std::size_t first, std::size_t count) const {
  if (first + count > cols_) throw DimensionError("column range exceeds matrix width");
  return {data_ + first, rows_, count, stride_};
}

MatrixView MatrixView::rows_range(std::size_t first, std::size_t count) const {
  if (first + count > rows_) throw DimensionError("row range exceeds matrix height");
  return {data_ + first * stride_, count, cols_, stride_};
}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), values_(rows * cols, 0.0) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows * cols) {
    throw std::invalid_argument("value count " + std::to_string(values_.size()) +
                                " does not match shape " + std::to_string(rows) + "x" +
                                std::to_string(cols));
  }
  if (!all_finite()) throw std::invalid_argument("matrix contains NaN or Inf");
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix out(n, n);
  for (std::size_t i = 0; i < n; ++i) out(i, i) = 1.0;
  return out;
}

DenseMatrix DenseMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.front().size();
  std::vector<double> values;
  values.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw std::invalid_argument("ragged row list");
    values.insert(values.end(), row.begin(), row.end());
  }
  return {r, c, std::move(values)};
}

DenseMatrix DenseMatrix::from_view(MatrixView v) {
  DenseMatrix out(v.rows(), v.cols());
  for (std::size_t i = 0; i < v.rows(); ++i) {
    const double* src = v.row_ptr(i);
    std::copy(src, src + v.cols(), out.data() + i * v.cols());
  }
  return out;
}

bool DenseMatrix::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double x) { return std::isfinite(x); });
}

DenseMatrix& DenseMatrix::operator+=(MatrixView other) {
  if (other.rows() != rows_ || other.cols() != cols_) throw DimensionError("shape mismatch in +=");
  for (std::size_t i = 0; i < rows_; ++i) {
    const double* src = other.row_ptr(i);
    double* dst = data() + i * cols_;
    for (std::size_t j = 0; j < cols_; ++j) dst[j] += src[j];
  }
  return *this;
}

DenseMatrix& DenseMatrix::operator*=(double s) {
  for (double& x : values_) x *= s;
  return *this;
}

BlockPartition::BlockPartition(std::vector<std::size_t> sizes) : sizes_(std::move(sizes)) {
  if (sizes_.empty()) throw std::invalid_argument("partition needs at least one block");
  offsets_.reserve(sizes_.size() + 1);
  for (std::size_t s : sizes_) {
    if (s == 0) throw std::invalid_argument("partition block sizes must be >= 1");
    offsets_.push_back(offsets_.back() + s);
  }
}

BlockPartition BlockPartition::equal(std::size_t n, std::size_t num_blocks) {
  if (num_blocks == 0 || n % num_blocks != 0) {
    throw std::invalid_argument("n = " + std::to_string(n) + " is not divisible by K = " +
                                std::to_string(num_blocks));
  }
  return BlockPartition(std::vector<std::size_t>(num_blocks, n / num_blocks));
}

MatrixView block_view(MatrixView m, const BlockPartition& part, std::size_t k, Axis axis) {
  if (k >= part.num_blocks()) throw std::out_of_range("block index out of range");
  const std::size_t axis_len = axis == Axis::kColumns ? m.cols() : m.rows();
  if (axis_len != part.total()) {
    throw DimensionError("partition covers " + std::to_string(part.total()) +
                         " but axis has length " + std::to_string(axis_len));
  }
  return axis == Axis::kColumns ? m.columns(part.offset(k), part.size(k))
                                : m.rows_range(part.offset(k), part.size(k));
}

void multiply_accumulate(MatrixView m, MatrixView n, double scale, DenseMatrix& out) {
  if (m.cols() != n.rows()) {
    throw DimensionError("inner dimensions differ: " + std::to_string(m.cols()) + " vs " +
                         std::to_string(n.rows()));
  }
  if (out.rows() != m.rows() || out.cols() != n.cols()) throw DimensionError("output shape mismatch");
  const std::size_t p = n.cols();
  for (std::size_t h = 0; h < m.rows(); ++h) {
    double* dst = out.data() + h * p;
    const double* mrow = m.row_ptr(h);
    for (std::size_t t = 0; t < m.cols(); ++t) {
      const double a = scale * mrow[t];
      if (a == 0.0) continue;
      const double* nrow = n.row_ptr(t);
      for (std::size_t f = 0; f < p; ++f) dst[f] += a * nrow[f];
    }
  }
}

DenseMatrix multiply_exact(MatrixView m, MatrixView n) {
  if (m.cols() != n.rows()) {
    throw DimensionError("inner dimensions differ: " + std::to_string(m.cols()) + " vs " +
                         std::to_string(n.rows()));
  }
  DenseMatrix out(m.rows(), n.cols());
  multiply_accumulate(m, n, 1.0, out);
  return out;
}

std::vector<double> column_norms(MatrixView m) {
  std::vector<double> sq(m.cols(), 0.0);
  for (std::size_t h = 0; h < m.rows(); ++h) {
    const double* row = m.row_ptr(h);
    for (std::size_t i = 0; i < m.cols(); ++i) sq[i] += row[i] * row[i];
  }
  for (double& x : sq) x = std::sqrt(x);
  return sq;
}

std::vector<double> row_norms(MatrixView n) {
  std::vector<double> out(n.rows());
  for (std::size_t i = 0; i < n.rows(); ++i) {
    const double* row = n.row_ptr(i);
    double s = 0.0;
    for (std::size_t f = 0; f < n.cols(); ++f) s += row[f] * row[f];
    out[i] = std::sqrt(s);
  }
  return out;
}

double frobenius_norm_squared(MatrixView m) {
  double s = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const double* row = m.row_ptr(i);
    for (std::size_t j = 0; j < m.cols(); ++j) s += row[j] * row[j];
  }
  return s;
}

double frobenius_norm(MatrixView m) { return std::sqrt(frobenius_norm_squared(m)); }

double frobenius_distance(MatrixView a, MatrixView b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw DimensionError("shape mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* ra = a.row_ptr(i);
    const double* rb = b.row_ptr(i);
    for (std::size_t j = 0; j < a.cols(); ++j) {
      const double d = ra[j] - rb[j];
      s += d * d;
    }
  }
  return std::sqrt(s);
}

}  // namespace bmm
