#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace modgrok {

using Vector = std::vector<double>;

/// Dense row-major matrix of 64-bit floats.
///
/// A value type: copies are deep, and every operation in linalg.hpp returns a
/// fresh Matrix instead of mutating its inputs.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols);
  Matrix(std::size_t rows, std::size_t cols, Vector data);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix zeros(std::size_t rows, std::size_t cols) { return {rows, cols}; }
  static Matrix identity(std::size_t n);
  static Matrix diagonal(std::span<const double> diag);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  Matrix transposed() const;
  bool all_finite() const;
  std::string shape_string() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  Vector data_;
};

}  // namespace modgrok
