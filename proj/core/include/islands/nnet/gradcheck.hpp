/*
 * Copyright 2026 The Islands Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <cstddef>
#include <functional>
#include <string>

#include "islands/nnet/params.hpp"
#include "islands/nnet/tensor.hpp"

namespace islands::nnet {

/// |a - n| / max(|a|, |n|, 1e-6). Entries whose gradient is below 1e-6 in
/// magnitude are compared on an absolute scale of 1e-6.
double relative_error(double analytic, double numeric) noexcept;

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  std::size_t checked = 0;
};

/// Compares analytic gradients against central differences over every scalar
/// of every parameter. `loss_fn` must be a pure function of the parameter
/// values that also accumulates analytic gradients into the store; it is
/// called once with zeroed gradients and then twice per scalar.
GradCheckResult grad_check(ParamStore& params, const std::function<double()>& loss_fn, double eps = 1e-5);

/// Central-difference gradient of `loss_fn` with respect to the entries of `x`.
Tensor2D numeric_gradient(Tensor2D& x, const std::function<double()>& loss_fn, double eps = 1e-5);

/// Largest relative_error over matching entries.
double max_relative_error(const Tensor2D& analytic, const Tensor2D& numeric);

}  // namespace islands::nnet
