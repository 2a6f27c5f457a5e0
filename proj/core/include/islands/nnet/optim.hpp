/*
 * Copyright 2026 The Islands Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <vector>

#include "islands/nnet/params.hpp"

namespace islands::nnet {

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  /// Decoupled weight decay, applied as lr * weight_decay * value.
  double weight_decay = 0.0;
};

/// Adaptive-moment optimiser. Moments are allocated lazily to match the store.
class Adam {
 public:
  explicit Adam(AdamOptions options = {}) : options_(options) {}

  /// Applies one update from the gradients currently in `params`. Throws
  /// NumericError naming the parameter if any gradient is non-finite.
  void step(ParamStore& params);

  const AdamOptions& options() const noexcept { return options_; }
  long steps_taken() const noexcept { return steps_; }

 private:
  AdamOptions options_;
  std::vector<Tensor2D> m_;
  std::vector<Tensor2D> v_;
  long steps_ = 0;
};

/// Rescales all gradients so their global L2 norm is at most `max_norm`;
/// returns the norm before clipping.
double clip_grad_norm(ParamStore& params, double max_norm);

}  // namespace islands::nnet
