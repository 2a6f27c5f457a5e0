/*
 * Copyright 2026 The Islands Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <span>

#include "islands/nnet/tensor.hpp"

namespace islands::nnet {

/// Dilated temporal convolution over x (time x channels_in) with zero padding
/// that preserves the length:
///   y[t] = b + sum_k x[t + (k - (width - 1) / 2) * dilation] W_k
/// W stacks the per-tap matrices: (width * channels_in) x channels_out, tap k
/// occupying rows [k * channels_in, (k + 1) * channels_in). Width must be odd.
Tensor2D conv1d_forward(const Tensor2D& x, const Tensor2D& w, const Tensor2D& b, int width, int dilation);

/// Accumulates dW and db; returns dx.
Tensor2D conv1d_backward(const Tensor2D& x, const Tensor2D& w, const Tensor2D& dy, int width, int dilation,
                         Tensor2D& dw, Tensor2D& db);

/// Frames covered by a stack of same-width dilated convolutions:
/// 1 + sum_l dilation_l * (width - 1).
int receptive_field(int width, std::span<const int> dilations);

}  // namespace islands::nnet
