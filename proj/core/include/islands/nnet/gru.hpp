/*
 * Copyright 2026 The Islands Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <string>

#include "islands/nnet/params.hpp"
#include "islands/nnet/tensor.hpp"

namespace islands::nnet {

/// Two-gate recurrent cell:
///   z  = sigmoid(x Wz + h Uz + bz)
///   r  = sigmoid(x Wr + h Ur + br)
///   h~ = tanh(x Wh + (r * h) Uh + bh)
///   h' = (1 - z) * h + z * h~
/// Rows are independent batch entries. With |h| < 1 the output stays in (-1, 1).
struct GruCell {
  ParamId wz, uz, bz;
  ParamId wr, ur, br;
  ParamId wh, uh, bh;
  int input = 0;
  int hidden = 0;

  static GruCell create(ParamStore& store, const std::string& prefix, int input, int hidden);
};

/// Activations kept for the backward pass.
struct GruCache {
  Tensor2D x;
  Tensor2D h_prev;
  Tensor2D z;
  Tensor2D r;
  Tensor2D h_tilde;
  Tensor2D rh;
};

/// One recurrent step. `cache` may be null when no backward pass follows.
Tensor2D gru_step(const ParamStore& store, const GruCell& cell, const Tensor2D& h_prev, const Tensor2D& x,
                  GruCache* cache = nullptr);

/// Backpropagates dL/dh' through one step: accumulates parameter gradients,
/// returns dL/dh_prev and writes dL/dx into `dx` when it is non-null.
Tensor2D gru_step_backward(ParamStore& store, const GruCell& cell, const GruCache& cache, const Tensor2D& dh,
                           Tensor2D* dx = nullptr);

}  // namespace islands::nnet
