/*
 * Copyright 2026 The Islands Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "islands/nnet/tensor.hpp"
#include "islands/random.hpp"

namespace islands::nnet {

/// Handle to a parameter inside a ParamStore. Stays valid across copies of
/// the store, so models holding ParamIds are plain values.
struct ParamId {
  std::size_t index = 0;
};

struct Parameter {
  std::string name;
  Tensor2D value;
  Tensor2D grad;  // same shape as value
};

/// Named parameter tensors (theta) with same-shape gradient buffers.
class ParamStore {
 public:
  /// Registers a zero-initialised parameter. Throws ValidationError on a
  /// duplicate name.
  ParamId add(std::string name, int rows, int cols);

  Parameter& operator[](ParamId id) { return params_[id.index]; }
  const Parameter& operator[](ParamId id) const { return params_[id.index]; }
  const Tensor2D& value(ParamId id) const { return params_[id.index].value; }
  Tensor2D& grad(ParamId id) { return params_[id.index].grad; }

  /// Throws std::out_of_range for unknown names.
  ParamId find(std::string_view name) const;

  std::size_t count() const noexcept { return params_.size(); }
  /// Total number of scalars.
  std::size_t scalar_count() const noexcept;
  std::vector<Parameter>& all() noexcept { return params_; }
  const std::vector<Parameter>& all() const noexcept { return params_; }

  void zero_grad();
  /// Copies of every value tensor, in registration order.
  std::vector<Tensor2D> snapshot() const;
  void restore(const std::vector<Tensor2D>& values);

  /// Glorot-uniform fill for matrices; bias-like rows (rows == 1) stay zero
  /// unless `include_vectors` is set.
  void init_glorot(Rng& rng, bool include_vectors = false);

  /// Throws NumericError naming the first parameter with a non-finite gradient.
  void require_finite_grads() const;

 private:
  std::vector<Parameter> params_;
};

}  // namespace islands::nnet
