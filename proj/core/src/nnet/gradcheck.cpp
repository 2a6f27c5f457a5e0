/*
 * Copyright 2026 The Islands Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#include "islands/nnet/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "islands/error.hpp"

namespace islands::nnet {

double relative_error(double analytic, double numeric) noexcept {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
  return std::abs(analytic - numeric) / scale;
}

GradCheckResult grad_check(ParamStore& params, const std::function<double()>& loss_fn, double eps) {
  params.zero_grad();
  loss_fn();
  params.require_finite_grads();
  std::vector<Tensor2D> analytic;
  for (const auto& p : params.all()) analytic.push_back(p.grad);

  GradCheckResult result;
  for (std::size_t pi = 0; pi < params.count(); ++pi) {
    auto& values = params.all()[pi].value.values();
    for (std::size_t j = 0; j < values.size(); ++j) {
      const double saved = values[j];
      values[j] = saved + eps;
      const double up = loss_fn();
      values[j] = saved - eps;
      const double down = loss_fn();
      values[j] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double err = relative_error(analytic[pi].values()[j], numeric);
      ++result.checked;
      if (result.worst_parameter.empty() || err > result.max_relative_error) {
        result.max_relative_error = err;
        result.worst_parameter = params.all()[pi].name;
        result.worst_index = j;
      }
    }
  }
  params.zero_grad();
  return result;
}

Tensor2D numeric_gradient(Tensor2D& x, const std::function<double()>& loss_fn, double eps) {
  Tensor2D g(x.rows(), x.cols());
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double saved = x.values()[j];
    x.values()[j] = saved + eps;
    const double up = loss_fn();
    x.values()[j] = saved - eps;
    const double down = loss_fn();
    x.values()[j] = saved;
    g.values()[j] = (up - down) / (2.0 * eps);
  }
  return g;
}

double max_relative_error(const Tensor2D& analytic, const Tensor2D& numeric) {
  require_same_shape(analytic, numeric, "max_relative_error");
  double worst = 0.0;
  for (std::size_t j = 0; j < analytic.size(); ++j) {
    worst = std::max(worst, relative_error(analytic.values()[j], numeric.values()[j]));
  }
  return worst;
}

}  // namespace islands::nnet
