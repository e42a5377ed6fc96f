#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace visattn {

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  Matrix transposed() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// A logit row plus an attendability mask (true = attendable).
struct MaskedRow {
  std::vector<double> values;
  std::vector<bool> mask;
};

/// Standard product with sequential accumulation over k. Throws ShapeError
/// when a.cols() != b.rows().
Matrix matmul(const Matrix& a, const Matrix& b);

/// Masked softmax. Masked entries are excluded from the max and the
/// normalizer and come out as exactly 0.
std::vector<double> softmax_row(const MaskedRow& row);

/// Softmax over every entry of `values`.
std::vector<double> softmax(std::span<const double> values);

/// In-place softmax over the first `count` entries of `row`; entries past
/// `count` are set to zero. Used by the engine's causal rows.
void softmax_prefix_inplace(std::span<double> row, std::size_t count);

// Reductions. All throw ContractViolation on empty input.
double stable_sum(std::span<const double> values);
double mean(std::span<const double> values);
/// Two-pass population variance (divides by n).
double variance(std::span<const double> values);

}  // namespace visattn
