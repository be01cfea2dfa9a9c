#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "vqtoken/rng.hpp"

namespace vqtoken {

/// Dense row-major matrix of doubles. The workhorse type for embeddings,
/// codebooks, projections and gradients. All public operations keep values
/// finite; accumulation order is fixed, so results are bit-reproducible.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);

  static Matrix identity(std::size_t n);
  /// Entries i.i.d. uniform in [-scale, scale).
  static Matrix random_uniform(std::size_t rows, std::size_t cols, double scale, Rng& rng);
  /// Entries i.i.d. standard normal times scale.
  static Matrix random_normal(std::size_t rows, std::size_t cols, double scale, Rng& rng);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool all_finite() const;

  bool operator==(const Matrix& other) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Standard product; requires a.cols == b.rows. Single fixed accumulation
/// order per output element.
Matrix matmul(const Matrix& a, const Matrix& b);

Matrix transpose(const Matrix& a);

/// a + b elementwise (same shape).
Matrix add(const Matrix& a, const Matrix& b);
/// a - b elementwise.
Matrix sub(const Matrix& a, const Matrix& b);
/// a * s elementwise.
Matrix scale(const Matrix& a, double s);
/// a .* b elementwise.
Matrix hadamard(const Matrix& a, const Matrix& b);
/// In-place a += s * b.
void axpy(Matrix& a, double s, const Matrix& b);

/// Row-wise softmax, stabilized by per-row max subtraction. Total over
/// finite inputs; each output row sums to 1 within 1e-9.
Matrix row_softmax(const Matrix& a);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);

/// Throws ContractError if any entry is non-finite.
void require_finite(const Matrix& m, const char* what);

}  // namespace vqtoken
