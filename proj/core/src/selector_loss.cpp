/*
 * Copyright 2026 The Islands Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#include <cmath>
#include <string>

#include "islands/error.hpp"
#include "islands/nnet/layers.hpp"
#include "islands/nnet/loss.hpp"
#include "islands/selector.hpp"

namespace islands {

namespace {

void check_inputs(std::size_t videos, std::span<const std::vector<int>> labels, const SelectorLossOptions& options) {
  if (videos != labels.size()) throw ValidationError("selector_loss: video count mismatch");
  if (videos == 0) throw ValidationError("selector_loss: no videos");
  if (!(options.gamma >= 0.0) || !std::isfinite(options.gamma)) throw ValidationError("selector_loss: gamma must be >= 0");
}

// Frame weights for one video: weight on -log p(y_t) and whether the frame is
// in the granularity term.
struct VideoWeights {
  double accuracy = 0.0;
  double granularity = 0.0;  // per covered frame
  std::vector<char> covered;
};

VideoWeights video_weights(const nnet::Tensor2D& probs, const std::vector<int>& y, const SelectorLossOptions& options) {
  if (static_cast<std::size_t>(probs.rows()) != y.size() || probs.cols() != 2) {
    throw ValidationError("selector_loss: probabilities and labels differ in length");
  }
  if (y.empty()) throw ValidationError("selector_loss: empty video");
  VideoWeights w;
  w.accuracy = 1.0 / static_cast<double>(y.size());
  w.covered.resize(y.size());
  long count = 0;
  for (std::size_t t = 0; t < y.size(); ++t) {
    if (y[t] != 0 && y[t] != 1) throw ValidationError("selector_loss: labels must be 0 or 1");
    const bool fine = options.indicator == IndicatorMode::truth ? y[t] == 0
                                                                : !(probs(static_cast<int>(t), 1) > probs(static_cast<int>(t), 0));
    w.covered[t] = fine;
    count += fine;
  }
  if (count > 0) {
    w.granularity = options.norm == GranularityNorm::restricted ? 1.0 / static_cast<double>(count)
                                                                : 1.0 / static_cast<double>(y.size());
  }
  return w;
}

}  // namespace

SelectorLoss selector_loss(std::span<const nnet::Tensor2D> probabilities, std::span<const std::vector<int>> labels,
                           const SelectorLossOptions& options) {
  check_inputs(probabilities.size(), labels, options);
  SelectorLoss out;
  for (std::size_t n = 0; n < probabilities.size(); ++n) {
    const auto& p = probabilities[n];
    const auto& y = labels[n];
    const auto w = video_weights(p, y, options);
    for (std::size_t t = 0; t < y.size(); ++t) {
      const double l = nnet::floored_nll(p(static_cast<int>(t), y[t]));
      out.accuracy_term += w.accuracy * l;
      if (w.covered[t]) out.granularity_term += w.granularity * l;
    }
  }
  const double inv = 1.0 / static_cast<double>(probabilities.size());
  out.accuracy_term *= inv;
  out.granularity_term *= inv;
  out.total = out.accuracy_term + options.gamma * out.granularity_term;
  return out;
}

SelectorLoss selector_loss_from_logits(std::span<const nnet::Tensor2D> logits, std::span<const std::vector<int>> labels,
                                       const SelectorLossOptions& options, std::vector<nnet::Tensor2D>* grads) {
  check_inputs(logits.size(), labels, options);
  SelectorLoss out;
  const double inv = 1.0 / static_cast<double>(logits.size());
  if (grads) grads->assign(logits.size(), {});
  for (std::size_t n = 0; n < logits.size(); ++n) {
    const auto probs = nnet::softmax_rows(logits[n]);
    const auto& y = labels[n];
    const auto w = video_weights(probs, y, options);
    if (grads) (*grads)[n] = nnet::Tensor2D(logits[n].rows(), 2);
    for (std::size_t t = 0; t < y.size(); ++t) {
      const auto ce = nnet::softmax_cross_entropy(logits[n].row(static_cast<int>(t)), y[t]);
      const double weight = w.accuracy + (w.covered[t] ? options.gamma * w.granularity : 0.0);
      out.accuracy_term += w.accuracy * ce.loss;
      if (w.covered[t]) out.granularity_term += w.granularity * ce.loss;
      if (grads) {
        for (int c = 0; c < 2; ++c) (*grads)[n](static_cast<int>(t), c) = inv * weight * ce.grad[static_cast<std::size_t>(c)];
      }
    }
  }
  out.accuracy_term *= inv;
  out.granularity_term *= inv;
  out.total = out.accuracy_term + options.gamma * out.granularity_term;
  return out;
}

}  // namespace islands
