/*
 * Copyright 2026 The Islands Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#include "islands/nnet/loss.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "islands/nnet/layers.hpp"

namespace islands::nnet {

double floored_nll(double p) noexcept { return -std::log(std::max(p, kProbabilityFloor)); }

LossAndGrad softmax_cross_entropy(std::span<const double> logits, int target) {
  if (target < 0 || static_cast<std::size_t>(target) >= logits.size()) {
    throw std::out_of_range("cross entropy target " + std::to_string(target) + " outside [0, " +
                            std::to_string(logits.size()) + ")");
  }
  LossAndGrad out;
  const double m = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double z : logits) sum += std::exp(z - m);
  const double log_p = logits[static_cast<std::size_t>(target)] - m - std::log(sum);
  if (log_p < std::log(kProbabilityFloor)) {
    out.loss = -std::log(kProbabilityFloor);
    out.grad.assign(logits.size(), 0.0);
    return out;
  }
  out.loss = -log_p;
  out.grad.resize(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) out.grad[i] = std::exp(logits[i] - m) / sum;
  out.grad[static_cast<std::size_t>(target)] -= 1.0;
  return out;
}

}  // namespace islands::nnet
