/*
 * Copyright 2026 The Islands Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <span>
#include <vector>

namespace islands::nnet {

/// Floor applied to every probability before taking its log.
inline constexpr double kProbabilityFloor = 1e-12;

/// -log(max(p, kProbabilityFloor)).
double floored_nll(double p) noexcept;

struct LossAndGrad {
  double loss = 0.0;
  std::vector<double> grad;
};

/// loss = -log softmax(logits)[target] (floored); grad = softmax - one_hot,
/// or zero when the floor is active. Throws std::out_of_range for a bad target.
LossAndGrad softmax_cross_entropy(std::span<const double> logits, int target);

}  // namespace islands::nnet
