/*
 * Copyright 2026 The Islands Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#include "islands/nnet/layers.hpp"

#include <algorithm>
#include <cmath>

#include "islands/error.hpp"

namespace islands::nnet {

Tensor2D dense_forward(const Tensor2D& x, const Tensor2D& w, const Tensor2D& b) {
  if (x.cols() != w.rows() || b.rows() != 1 || b.cols() != w.cols()) {
    throw ShapeError("dense: x " + x.shape_string() + ", W " + w.shape_string() + ", b " + b.shape_string());
  }
  Tensor2D y = matmul(x, w);
  for (int r = 0; r < y.rows(); ++r) {
    auto row = y.row(r);
    for (int c = 0; c < y.cols(); ++c) row[static_cast<std::size_t>(c)] += b(0, c);
  }
  return y;
}

Tensor2D dense_backward(const Tensor2D& x, const Tensor2D& w, const Tensor2D& dy, Tensor2D& dw, Tensor2D& db) {
  if (dy.rows() != x.rows() || dy.cols() != w.cols()) {
    throw ShapeError("dense backward: dy " + dy.shape_string() + " for x " + x.shape_string());
  }
  require_same_shape(dw, w, "dense backward dW");
  matmul_tn(x, dy, dw, true);
  for (int r = 0; r < dy.rows(); ++r) {
    for (int c = 0; c < dy.cols(); ++c) db(0, c) += dy(r, c);
  }
  return matmul_nt(dy, w);
}

Dense Dense::create(ParamStore& store, const std::string& prefix, int in, int out) {
  Dense d;
  d.w = store.add(prefix + ".weight", in, out);
  d.b = store.add(prefix + ".bias", 1, out);
  d.in = in;
  d.out = out;
  return d;
}

Tensor2D Dense::forward(const ParamStore& store, const Tensor2D& x) const {
  return dense_forward(x, store.value(w), store.value(b));
}

Tensor2D Dense::backward(ParamStore& store, const Tensor2D& x, const Tensor2D& dy) const {
  return dense_backward(x, store.value(w), dy, store[w].grad, store[b].grad);
}

namespace {

template <typename F>
Tensor2D map(const Tensor2D& x, F f) {
  Tensor2D y(x.rows(), x.cols());
  const auto& xv = x.values();
  auto& yv = y.values();
  for (std::size_t i = 0; i < xv.size(); ++i) yv[i] = f(xv[i]);
  return y;
}

template <typename F>
Tensor2D zip(const Tensor2D& a, const Tensor2D& b, F f, const char* context) {
  require_same_shape(a, b, context);
  Tensor2D y(a.rows(), a.cols());
  const auto& av = a.values();
  const auto& bv = b.values();
  auto& yv = y.values();
  for (std::size_t i = 0; i < av.size(); ++i) yv[i] = f(av[i], bv[i]);
  return y;
}

}  // namespace

Tensor2D relu(const Tensor2D& x) {
  return map(x, [](double v) { return v > 0.0 ? v : 0.0; });
}

Tensor2D relu_backward(const Tensor2D& x, const Tensor2D& dy) {
  return zip(x, dy, [](double v, double g) { return v > 0.0 ? g : 0.0; }, "relu backward");
}

double sigmoid(double x) noexcept {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Tensor2D sigmoid(const Tensor2D& x) {
  return map(x, [](double v) { return sigmoid(v); });
}

Tensor2D sigmoid_backward(const Tensor2D& y, const Tensor2D& dy) {
  return zip(y, dy, [](double s, double g) { return g * s * (1.0 - s); }, "sigmoid backward");
}

Tensor2D tanh(const Tensor2D& x) {
  return map(x, [](double v) { return std::tanh(v); });
}

Tensor2D tanh_backward(const Tensor2D& y, const Tensor2D& dy) {
  return zip(y, dy, [](double t, double g) { return g * (1.0 - t * t); }, "tanh backward");
}

double softplus(double x) noexcept {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double log_sigmoid(double x) noexcept { return -softplus(-x); }

Tensor2D softplus(const Tensor2D& x) {
  return map(x, [](double v) { return softplus(v); });
}

Tensor2D softplus_backward(const Tensor2D& x, const Tensor2D& dy) {
  return zip(x, dy, [](double v, double g) { return g * sigmoid(v); }, "softplus backward");
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> p(logits.size());
  if (logits.empty()) return p;
  const double m = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - m);
    sum += p[i];
  }
  for (auto& v : p) v /= sum;
  return p;
}

Tensor2D softmax_rows(const Tensor2D& logits) {
  Tensor2D out(logits.rows(), logits.cols());
  for (int r = 0; r < logits.rows(); ++r) {
    const auto p = softmax(logits.row(r));
    std::copy(p.begin(), p.end(), out.row(r).begin());
  }
  return out;
}

Tensor2D hadamard(const Tensor2D& a, const Tensor2D& b) {
  return zip(a, b, [](double u, double v) { return u * v; }, "hadamard");
}

Tensor2D dropout_mask(int rows, int cols, double p, Rng& rng) {
  if (!(p >= 0.0 && p < 1.0)) throw ValidationError("dropout rate must lie in [0, 1)");
  Tensor2D mask(rows, cols, 1.0);
  if (p == 0.0) return mask;
  const double keep_scale = 1.0 / (1.0 - p);
  std::bernoulli_distribution keep(1.0 - p);
  for (auto& v : mask.values()) v = keep(rng) ? keep_scale : 0.0;
  return mask;
}

Tensor2D dropout_mask(int rows, int cols, double p, std::uint64_t seed) {
  Rng rng(seed);
  return dropout_mask(rows, cols, p, rng);
}

}  // namespace islands::nnet
