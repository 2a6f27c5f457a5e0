/*
 * Copyright 2026 The Islands Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "islands/nnet/params.hpp"
#include "islands/nnet/tensor.hpp"
#include "islands/random.hpp"

namespace islands::nnet {

// ---- dense -----------------------------------------------------------------

/// y = x W + b, with b (1 x out) broadcast over rows.
Tensor2D dense_forward(const Tensor2D& x, const Tensor2D& w, const Tensor2D& b);

/// Accumulates dW += x^T dy and db += column sums of dy; returns dx = dy W^T.
Tensor2D dense_backward(const Tensor2D& x, const Tensor2D& w, const Tensor2D& dy, Tensor2D& dw, Tensor2D& db);

/// Dense layer whose weights live in a ParamStore.
struct Dense {
  ParamId w;
  ParamId b;
  int in = 0;
  int out = 0;

  static Dense create(ParamStore& store, const std::string& prefix, int in, int out);
  Tensor2D forward(const ParamStore& store, const Tensor2D& x) const;
  Tensor2D backward(ParamStore& store, const Tensor2D& x, const Tensor2D& dy) const;
};

// ---- elementwise -----------------------------------------------------------

Tensor2D relu(const Tensor2D& x);
Tensor2D relu_backward(const Tensor2D& x, const Tensor2D& dy);
Tensor2D sigmoid(const Tensor2D& x);
double sigmoid(double x) noexcept;
/// dy * y * (1 - y), given the forward output y.
Tensor2D sigmoid_backward(const Tensor2D& y, const Tensor2D& dy);
Tensor2D tanh(const Tensor2D& x);
/// dy * (1 - y^2), given the forward output y.
Tensor2D tanh_backward(const Tensor2D& y, const Tensor2D& dy);
/// log(1 + e^x), overflow-safe.
double softplus(double x) noexcept;
/// log(sigmoid(x)) = -softplus(-x).
double log_sigmoid(double x) noexcept;
Tensor2D softplus(const Tensor2D& x);
Tensor2D softplus_backward(const Tensor2D& x, const Tensor2D& dy);

/// Row-wise softmax.
Tensor2D softmax_rows(const Tensor2D& logits);
std::vector<double> softmax(std::span<const double> logits);

/// Elementwise product.
Tensor2D hadamard(const Tensor2D& a, const Tensor2D& b);

// ---- dropout ---------------------------------------------------------------

/// Inverted-dropout mask: each entry is 0 with probability p and 1 / (1 - p)
/// otherwise. Throws ValidationError unless 0 <= p < 1.
Tensor2D dropout_mask(int rows, int cols, double p, Rng& rng);
Tensor2D dropout_mask(int rows, int cols, double p, std::uint64_t seed);

}  // namespace islands::nnet
