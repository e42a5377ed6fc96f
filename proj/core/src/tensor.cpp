#include "visattn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "visattn/error.hpp"

namespace visattn {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw ShapeError("matrix data length " + std::to_string(data_.size()) + " != " +
                     std::to_string(rows_) + "x" + std::to_string(cols_));
  }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw ShapeError("ragged matrix initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                     " times " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
  Matrix out(a.rows(), b.cols());
  // i-k-j order: each out(i, j) still accumulates k = 0, 1, ... in sequence.
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto dst = out.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      auto src = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) dst[j] += aik * src[j];
    }
  }
  return out;
}

std::vector<double> softmax_row(const MaskedRow& row) {
  if (row.values.size() != row.mask.size()) {
    throw ShapeError("softmax_row: values and mask lengths differ");
  }
  double max_v = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (std::size_t i = 0; i < row.values.size(); ++i) {
    if (!row.mask[i]) continue;
    any = true;
    max_v = std::max(max_v, row.values[i]);
  }
  if (!any) throw ContractViolation("softmax_row: every position is masked");

  std::vector<double> out(row.values.size(), 0.0);
  double denom = 0.0;
  for (std::size_t i = 0; i < row.values.size(); ++i) {
    if (!row.mask[i]) continue;
    out[i] = std::exp(row.values[i] - max_v);
    denom += out[i];
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (row.mask[i]) out[i] /= denom;
  }
  return out;
}

std::vector<double> softmax(std::span<const double> values) {
  std::vector<double> out(values.begin(), values.end());
  softmax_prefix_inplace(out, out.size());
  return out;
}

void softmax_prefix_inplace(std::span<double> row, std::size_t count) {
  if (count == 0 || count > row.size()) {
    throw ContractViolation("softmax: attendable prefix must be non-empty and within the row");
  }
  double max_v = row[0];
  for (std::size_t i = 1; i < count; ++i) max_v = std::max(max_v, row[i]);
  double denom = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    row[i] = std::exp(row[i] - max_v);
    denom += row[i];
  }
  for (std::size_t i = 0; i < count; ++i) row[i] /= denom;
  for (std::size_t i = count; i < row.size(); ++i) row[i] = 0.0;
}

double stable_sum(std::span<const double> values) {
  if (values.empty()) throw ContractViolation("stable_sum: empty input");
  // Neumaier compensated summation, strictly left to right.
  double sum = 0.0;
  double comp = 0.0;
  for (double v : values) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v)) {
      comp += (sum - t) + v;
    } else {
      comp += (v - t) + sum;
    }
    sum = t;
  }
  return sum + comp;
}

double mean(std::span<const double> values) {
  if (values.empty()) throw ContractViolation("mean: empty input");
  return stable_sum(values) / static_cast<double>(values.size());
}

double variance(std::span<const double> values) {
  if (values.empty()) throw ContractViolation("variance: empty input");
  const double m = mean(values);
  std::vector<double> sq(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double d = values[i] - m;
    sq[i] = d * d;
  }
  return stable_sum(sq) / static_cast<double>(values.size());
}

}  // namespace visattn
