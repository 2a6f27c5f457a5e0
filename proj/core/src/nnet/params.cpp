/*
 * Copyright 2026 The Islands Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#include "islands/nnet/params.hpp"

#include <cmath>
#include <stdexcept>

#include "islands/error.hpp"

namespace islands::nnet {

ParamId ParamStore::add(std::string name, int rows, int cols) {
  for (const auto& p : params_) {
    if (p.name == name) throw ValidationError("duplicate parameter name '" + name + "'");
  }
  params_.push_back({std::move(name), Tensor2D(rows, cols), Tensor2D(rows, cols)});
  return {params_.size() - 1};
}

ParamId ParamStore::find(std::string_view name) const {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i].name == name) return {i};
  }
  throw std::out_of_range("unknown parameter '" + std::string(name) + "'");
}

std::size_t ParamStore::scalar_count() const noexcept {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

void ParamStore::zero_grad() {
  for (auto& p : params_) p.grad.fill(0.0);
}

std::vector<Tensor2D> ParamStore::snapshot() const {
  std::vector<Tensor2D> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p.value);
  return out;
}

void ParamStore::restore(const std::vector<Tensor2D>& values) {
  if (values.size() != params_.size()) throw ShapeError("restore: parameter count mismatch");
  for (std::size_t i = 0; i < values.size(); ++i) {
    require_same_shape(params_[i].value, values[i], "restore");
    params_[i].value = values[i];
  }
}

void ParamStore::init_glorot(Rng& rng, bool include_vectors) {
  for (auto& p : params_) {
    if (p.value.rows() == 1 && !include_vectors) {
      p.value.fill(0.0);
      continue;
    }
    const double limit = std::sqrt(6.0 / static_cast<double>(p.value.rows() + p.value.cols()));
    std::uniform_real_distribution<double> u(-limit, limit);
    for (auto& v : p.value.values()) v = u(rng);
  }
}

void ParamStore::require_finite_grads() const {
  for (const auto& p : params_) {
    if (!p.grad.all_finite()) throw NumericError("non-finite gradient in parameter '" + p.name + "'");
  }
}

}  // namespace islands::nnet
