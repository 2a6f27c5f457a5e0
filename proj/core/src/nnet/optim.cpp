/*
 * Copyright 2026 The Islands Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#include "islands/nnet/optim.hpp"

#include <cmath>

namespace islands::nnet {

void Adam::step(ParamStore& params) {
  params.require_finite_grads();
  auto& all = params.all();
  if (m_.size() != all.size()) {
    m_.clear();
    v_.clear();
    for (const auto& p : all) {
      m_.emplace_back(p.value.rows(), p.value.cols());
      v_.emplace_back(p.value.rows(), p.value.cols());
    }
  }
  ++steps_;
  const double b1 = options_.beta1;
  const double b2 = options_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
  const double lr = options_.learning_rate;
  for (std::size_t i = 0; i < all.size(); ++i) {
    auto& value = all[i].value.values();
    const auto& grad = all[i].grad.values();
    auto& m = m_[i].values();
    auto& v = v_[i].values();
    for (std::size_t j = 0; j < value.size(); ++j) {
      const double g = grad[j];
      m[j] = b1 * m[j] + (1.0 - b1) * g;
      v[j] = b2 * v[j] + (1.0 - b2) * g * g;
      if (lr == 0.0) continue;
      value[j] -= lr * ((m[j] / c1) / (std::sqrt(v[j] / c2) + options_.epsilon) + options_.weight_decay * value[j]);
    }
  }
}

double clip_grad_norm(ParamStore& params, double max_norm) {
  double sq = 0.0;
  for (const auto& p : params.all()) {
    for (double g : p.grad.values()) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double scale = max_norm / norm;
    for (auto& p : params.all()) p.grad *= scale;
  }
  return norm;
}

}  // namespace islands::nnet
