/*
 * Copyright 2026 The Islands Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#include "islands/nnet/conv1d.hpp"

#include "islands/error.hpp"

namespace islands::nnet {

namespace {

void check_shapes(const Tensor2D& x, const Tensor2D& w, int width, int dilation) {
  if (width < 1 || width % 2 == 0) throw ShapeError("conv1d: kernel width must be odd");
  if (dilation < 1) throw ShapeError("conv1d: dilation must be positive");
  if (w.rows() != width * x.cols()) {
    throw ShapeError("conv1d: weight " + w.shape_string() + " does not match width " + std::to_string(width) +
                     " over " + std::to_string(x.cols()) + " input channels");
  }
}

}  // namespace

Tensor2D conv1d_forward(const Tensor2D& x, const Tensor2D& w, const Tensor2D& b, int width, int dilation) {
  check_shapes(x, w, width, dilation);
  if (b.rows() != 1 || b.cols() != w.cols()) throw ShapeError("conv1d: bias shape " + b.shape_string());
  const int steps = x.rows();
  const int cin = x.cols();
  const int cout = w.cols();
  const int half = (width - 1) / 2;
  Tensor2D y(steps, cout);
  for (int t = 0; t < steps; ++t) {
    double* yr = y.data() + static_cast<std::size_t>(t) * cout;
    for (int o = 0; o < cout; ++o) yr[o] = b(0, o);
    for (int k = 0; k < width; ++k) {
      const int src = t + (k - half) * dilation;
      if (src < 0 || src >= steps) continue;
      const double* xr = x.data() + static_cast<std::size_t>(src) * cin;
      for (int i = 0; i < cin; ++i) {
        const double xv = xr[i];
        if (xv == 0.0) continue;
        const double* wr = w.data() + static_cast<std::size_t>(k * cin + i) * cout;
        for (int o = 0; o < cout; ++o) yr[o] += xv * wr[o];
      }
    }
  }
  return y;
}

Tensor2D conv1d_backward(const Tensor2D& x, const Tensor2D& w, const Tensor2D& dy, int width, int dilation,
                         Tensor2D& dw, Tensor2D& db) {
  check_shapes(x, w, width, dilation);
  if (dy.rows() != x.rows() || dy.cols() != w.cols()) throw ShapeError("conv1d backward: dy " + dy.shape_string());
  require_same_shape(dw, w, "conv1d backward dW");
  const int steps = x.rows();
  const int cin = x.cols();
  const int cout = w.cols();
  const int half = (width - 1) / 2;
  Tensor2D dx(steps, cin);
  for (int t = 0; t < steps; ++t) {
    const double* g = dy.data() + static_cast<std::size_t>(t) * cout;
    for (int o = 0; o < cout; ++o) db(0, o) += g[o];
    for (int k = 0; k < width; ++k) {
      const int src = t + (k - half) * dilation;
      if (src < 0 || src >= steps) continue;
      const double* xr = x.data() + static_cast<std::size_t>(src) * cin;
      double* dxr = dx.data() + static_cast<std::size_t>(src) * cin;
      for (int i = 0; i < cin; ++i) {
        const std::size_t wrow = static_cast<std::size_t>(k * cin + i) * cout;
        const double* wr = w.data() + wrow;
        double* dwr = dw.data() + wrow;
        const double xv = xr[i];
        double acc = 0.0;
        for (int o = 0; o < cout; ++o) {
          dwr[o] += xv * g[o];
          acc += wr[o] * g[o];
        }
        dxr[i] += acc;
      }
    }
  }
  return dx;
}

int receptive_field(int width, std::span<const int> dilations) {
  int field = 1;
  for (int d : dilations) field += d * (width - 1);
  return field;
}

}  // namespace islands::nnet
