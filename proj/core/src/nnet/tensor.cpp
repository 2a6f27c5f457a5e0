/*
 * Copyright 2026 The Islands Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#include "islands/nnet/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "islands/error.hpp"

namespace islands::nnet {

Tensor2D::Tensor2D(int rows, int cols, double fill)
    : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), fill) {
  if (rows < 0 || cols < 0) throw ShapeError("negative tensor dimension");
}

Tensor2D::Tensor2D(int rows, int cols, std::vector<double> values) : rows_(rows), cols_(cols), data_(std::move(values)) {
  if (rows < 0 || cols < 0) throw ShapeError("negative tensor dimension");
  if (data_.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols)) {
    throw ShapeError("tensor data length does not match " + shape_string());
  }
}

Tensor2D::Tensor2D(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = static_cast<int>(rows.size());
  cols_ = rows_ == 0 ? 0 : static_cast<int>(rows.begin()->size());
  data_.reserve(static_cast<std::size_t>(rows_) * static_cast<std::size_t>(cols_));
  for (const auto& r : rows) {
    if (static_cast<int>(r.size()) != cols_) throw ShapeError("ragged tensor initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

void Tensor2D::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor2D::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

std::string Tensor2D::shape_string() const { return std::to_string(rows_) + "x" + std::to_string(cols_); }

Tensor2D& Tensor2D::operator+=(const Tensor2D& other) {
  require_same_shape(*this, other, "tensor +=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Tensor2D& Tensor2D::operator*=(double s) noexcept {
  for (auto& v : data_) v *= s;
  return *this;
}

void require_same_shape(const Tensor2D& a, const Tensor2D& b, const char* context) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(context) + ": shape " + a.shape_string() + " vs " + b.shape_string());
  }
}

Tensor2D matmul(const Tensor2D& a, const Tensor2D& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: " + a.shape_string() + " * " + b.shape_string());
  }
  Tensor2D out(a.rows(), b.cols());
  const int n = a.rows();
  const int k = a.cols();
  const int m = b.cols();
  const double* bd = b.data();
  for (int i = 0; i < n; ++i) {
    double* o = out.data() + static_cast<std::size_t>(i) * m;
    const double* ar = a.data() + static_cast<std::size_t>(i) * k;
    for (int p = 0; p < k; ++p) {
      const double av = ar[p];
      if (av == 0.0) continue;
      const double* br = bd + static_cast<std::size_t>(p) * m;
      for (int j = 0; j < m; ++j) o[j] += av * br[j];
    }
  }
  return out;
}

void matmul_tn(const Tensor2D& a, const Tensor2D& b, Tensor2D& out, bool accumulate) {
  if (a.rows() != b.rows()) {
    throw ShapeError("matmul_tn: " + a.shape_string() + "^T * " + b.shape_string());
  }
  const int n = a.rows();
  const int k = a.cols();
  const int m = b.cols();
  if (out.rows() != k || out.cols() != m) {
    if (accumulate) throw ShapeError("matmul_tn: accumulator has shape " + out.shape_string());
    out = Tensor2D(k, m);
  } else if (!accumulate) {
    out.fill(0.0);
  }
  for (int r = 0; r < n; ++r) {
    const double* ar = a.data() + static_cast<std::size_t>(r) * k;
    const double* br = b.data() + static_cast<std::size_t>(r) * m;
    for (int p = 0; p < k; ++p) {
      const double av = ar[p];
      if (av == 0.0) continue;
      double* o = out.data() + static_cast<std::size_t>(p) * m;
      for (int j = 0; j < m; ++j) o[j] += av * br[j];
    }
  }
}

Tensor2D matmul_nt(const Tensor2D& a, const Tensor2D& b) {
  if (a.cols() != b.cols()) {
    throw ShapeError("matmul_nt: " + a.shape_string() + " * " + b.shape_string() + "^T");
  }
  Tensor2D out(a.rows(), b.rows());
  const int k = a.cols();
  for (int i = 0; i < a.rows(); ++i) {
    const double* ar = a.data() + static_cast<std::size_t>(i) * k;
    for (int j = 0; j < b.rows(); ++j) {
      const double* br = b.data() + static_cast<std::size_t>(j) * k;
      double s = 0.0;
      for (int p = 0; p < k; ++p) s += ar[p] * br[p];
      out(i, j) = s;
    }
  }
  return out;
}

}  // namespace islands::nnet
