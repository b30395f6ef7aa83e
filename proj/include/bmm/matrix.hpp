#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace bmm {

/// Raised when operand shapes do not agree.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Non-owning read-only view of a row-major block of doubles.
///
/// Element (i, j) lives at data[i * stride + j]. Column blocks of a matrix
/// and row blocks of a matrix are both expressible without copying.
class MatrixView {
 public:
  MatrixView() = default;
  MatrixView(const double* data, std::size_t rows, std::size_t cols, std::size_t stride)
      : data_(data), rows_(rows), cols_(cols), stride_(stride) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t stride() const { return stride_; }
  const double* data() const { return data_; }

  double operator()(std::size_t i, std::size_t j) const { return data_[i * stride_ + j]; }
  const double* row_ptr(std::size_t i) const { return data_ + i * stride_; }

  MatrixView columns(std::size_t first, std::size_t count) const;
  MatrixView rows_range(std::size_t first, std::size_t count) const;

 private:
  const double* data_ = nullptr;
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::size_t stride_ = 0;
};

/// Dense real matrix, row-major, finite entries only.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols);
  /// Throws std::invalid_argument if the value count is wrong or any entry is NaN/Inf.
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  static DenseMatrix zeros(std::size_t rows, std::size_t cols) { return {rows, cols}; }
  static DenseMatrix identity(std::size_t n);
  static DenseMatrix from_rows(const std::vector<std::vector<double>>& rows);
  static DenseMatrix from_view(MatrixView v);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return values_.size(); }

  double operator()(std::size_t i, std::size_t j) const { return values_[i * cols_ + j]; }
  double& operator()(std::size_t i, std::size_t j) { return values_[i * cols_ + j]; }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }
  const double* data() const { return values_.data(); }
  double* data() { return values_.data(); }

  MatrixView view() const { return {values_.data(), rows_, cols_, cols_}; }
  operator MatrixView() const { return view(); }  // NOLINT(google-explicit-constructor)

  bool all_finite() const;

  DenseMatrix& operator+=(MatrixView other);
  DenseMatrix& operator*=(double s);

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

/// Split of the shared inner dimension into K contiguous groups.
class BlockPartition {
 public:
  BlockPartition() = default;
  /// Every size must be >= 1 and there must be at least one block.
  explicit BlockPartition(std::vector<std::size_t> sizes);

  /// K blocks of size n / K. Throws unless K divides n.
  static BlockPartition equal(std::size_t n, std::size_t num_blocks);

  std::size_t num_blocks() const { return sizes_.size(); }
  std::size_t total() const { return offsets_.back(); }
  std::size_t size(std::size_t k) const { return sizes_[k]; }
  std::size_t offset(std::size_t k) const { return offsets_[k]; }
  const std::vector<std::size_t>& sizes() const { return sizes_; }

  friend bool operator==(const BlockPartition& a, const BlockPartition& b) {
    return a.sizes_ == b.sizes_;
  }

 private:
  std::vector<std::size_t> sizes_;
  std::vector<std::size_t> offsets_{0};
};

enum class Axis { kColumns, kRows };

/// View of block k (0-based) of M along the inner dimension: columns of M or rows of N.
MatrixView block_view(MatrixView m, const BlockPartition& part, std::size_t k, Axis axis);

/// Exact product MN. Throws DimensionError if m.cols() != n.rows().
DenseMatrix multiply_exact(MatrixView m, MatrixView n);

/// Accumulates scale * (m n) into out.
void multiply_accumulate(MatrixView m, MatrixView n, double scale, DenseMatrix& out);

std::vector<double> column_norms(MatrixView m);
std::vector<double> row_norms(MatrixView n);
double frobenius_norm(MatrixView m);
double frobenius_norm_squared(MatrixView m);

/// Frobenius norm of a - b.
double frobenius_distance(MatrixView a, MatrixView b);

}  // namespace bmm
