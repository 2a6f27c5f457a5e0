/*
 * Copyright 2026 The Islands Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace islands::nnet {

/// Dense row-major matrix of doubles.
class Tensor2D {
 public:
  Tensor2D() = default;
  Tensor2D(int rows, int cols, double fill = 0.0);
  Tensor2D(int rows, int cols, std::vector<double> values);
  /// Row-list construction, mostly for tests: {{1, 2}, {3, 4}}.
  Tensor2D(std::initializer_list<std::initializer_list<double>> rows);

  int rows() const noexcept { return rows_; }
  int cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(int r, int c) noexcept { return data_[index(r, c)]; }
  double operator()(int r, int c) const noexcept { return data_[index(r, c)]; }

  std::span<double> row(int r) noexcept { return {data_.data() + index(r, 0), static_cast<std::size_t>(cols_)}; }
  std::span<const double> row(int r) const noexcept {
    return {data_.data() + index(r, 0), static_cast<std::size_t>(cols_)};
  }

  std::vector<double>& values() noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }
  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }

  void fill(double v);
  bool same_shape(const Tensor2D& other) const noexcept { return rows_ == other.rows_ && cols_ == other.cols_; }
  bool all_finite() const noexcept;
  std::string shape_string() const;

  Tensor2D& operator+=(const Tensor2D& other);
  Tensor2D& operator*=(double s) noexcept;

  friend bool operator==(const Tensor2D&, const Tensor2D&) = default;

 private:
  std::size_t index(int r, int c) const noexcept {
    return static_cast<std::size_t>(r) * static_cast<std::size_t>(cols_) + static_cast<std::size_t>(c);
  }

  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

/// a (n x k) * b (k x m)
Tensor2D matmul(const Tensor2D& a, const Tensor2D& b);
/// a^T * b, accumulated into `out` (k x m) when `accumulate` is set.
void matmul_tn(const Tensor2D& a, const Tensor2D& b, Tensor2D& out, bool accumulate);
/// a * b^T
Tensor2D matmul_nt(const Tensor2D& a, const Tensor2D& b);

/// Throws ShapeError with `context` when the shapes differ.
void require_same_shape(const Tensor2D& a, const Tensor2D& b, const char* context);

}  // namespace islands::nnet
