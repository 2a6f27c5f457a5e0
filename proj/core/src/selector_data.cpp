/*
 * Copyright 2026 The Islands Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#include <cmath>
#include <string>

#include "islands/error.hpp"
#include "islands/selector.hpp"

namespace islands {

std::vector<int> derive_labels(const ForecastDistribution& forecast, std::span<const int> truth_fine) {
  if (static_cast<std::size_t>(forecast.horizon) != truth_fine.size() ||
      forecast.fine_argmax.size() != truth_fine.size()) {
    throw ValidationError("derive_labels: forecast horizon " + std::to_string(forecast.horizon) +
                          " does not match truth length " + std::to_string(truth_fine.size()));
  }
  std::vector<int> y(truth_fine.size());
  for (std::size_t t = 0; t < y.size(); ++t) y[t] = forecast.fine_argmax[t] == truth_fine[t] ? 0 : 1;
  return y;
}

nnet::Tensor2D build_features(const ForecastDistribution& forecast) {
  const int cf = forecast.fine_mean.cols();
  const int cc = forecast.coarse_mean.cols();
  nnet::Tensor2D o(forecast.horizon, cf + cc);
  for (int t = 0; t < forecast.horizon; ++t) {
    for (int c = 0; c < cf; ++c) o(t, c) = forecast.fine_mean(t, c);
    for (int c = 0; c < cc; ++c) o(t, cf + c) = forecast.coarse_mean(t, c);
  }
  return o;
}

std::vector<int> fine_argmax_from_features(const nnet::Tensor2D& features, const Taxonomy& taxonomy) {
  const int cf = taxonomy.fine_count();
  if (features.cols() != cf + taxonomy.coarse_count()) throw ShapeError("selector features width mismatch");
  std::vector<int> out(static_cast<std::size_t>(features.rows()));
  for (int t = 0; t < features.rows(); ++t) out[static_cast<std::size_t>(t)] = argmax(features.row(t).first(static_cast<std::size_t>(cf)));
  return out;
}

std::vector<int> coarse_argmax_from_features(const nnet::Tensor2D& features, const Taxonomy& taxonomy) {
  const int cf = taxonomy.fine_count();
  if (features.cols() != cf + taxonomy.coarse_count()) throw ShapeError("selector features width mismatch");
  std::vector<int> out(static_cast<std::size_t>(features.rows()));
  for (int t = 0; t < features.rows(); ++t) out[static_cast<std::size_t>(t)] = argmax(features.row(t).subspan(static_cast<std::size_t>(cf)));
  return out;
}

void SelectorSample::validate(const Taxonomy& taxonomy) const {
  const auto where = "selector sample '" + video_id + "'";
  if (features.rows() < 1) throw ValidationError(where + ": empty feature matrix");
  if (features.cols() != taxonomy.fine_count() + taxonomy.coarse_count()) {
    throw ShapeError(where + ": feature width " + std::to_string(features.cols()) + ", expected " +
                     std::to_string(taxonomy.fine_count() + taxonomy.coarse_count()));
  }
  if (labels.size() != static_cast<std::size_t>(features.rows()) || truth_fine.size() != labels.size()) {
    throw ValidationError(where + ": label tracks do not match the feature rows");
  }
  if (!features.all_finite()) throw ValidationError(where + ": non-finite features");
  for (std::size_t t = 0; t < labels.size(); ++t) {
    if (labels[t] != 0 && labels[t] != 1) throw ValidationError(where + ": granularity labels must be 0 or 1");
    if (truth_fine[t] < 0 || truth_fine[t] >= taxonomy.fine_count()) throw ValidationError(where + ": label out of range");
  }
}

SelectorSample make_selector_sample(std::string video_id, const ForecastDistribution& forecast,
                                    std::vector<int> truth_fine) {
  SelectorSample s;
  s.labels = derive_labels(forecast, truth_fine);
  s.video_id = std::move(video_id);
  s.features = build_features(forecast);
  s.truth_fine = std::move(truth_fine);
  return s;
}

std::vector<int> select_from_probabilities(const nnet::Tensor2D& probabilities) {
  if (probabilities.cols() != 2) throw ShapeError("selection needs probability pairs");
  std::vector<int> out(static_cast<std::size_t>(probabilities.rows()));
  for (int t = 0; t < probabilities.rows(); ++t) out[static_cast<std::size_t>(t)] = probabilities(t, 1) > probabilities(t, 0) ? 1 : 0;
  return out;
}

GranularityTrack oracle_selector(const ForecastDistribution& forecast, std::span<const int> truth_fine) {
  GranularityTrack track;
  track.selection = derive_labels(forecast, truth_fine);
  track.probabilities = nnet::Tensor2D(forecast.horizon, 2);
  for (int t = 0; t < forecast.horizon; ++t) track.probabilities(t, track.selection[static_cast<std::size_t>(t)]) = 1.0;
  return track;
}

std::vector<MixedLabel> compose_output(std::span<const int> selection, const ForecastDistribution& forecast) {
  if (selection.size() != static_cast<std::size_t>(forecast.horizon)) {
    throw ValidationError("compose_output: selection length does not match the forecast horizon");
  }
  std::vector<MixedLabel> out(selection.size());
  for (std::size_t t = 0; t < selection.size(); ++t) {
    if (selection[t] == 0) {
      out[t] = {Granularity::fine, forecast.fine_argmax[t]};
    } else if (selection[t] == 1) {
      out[t] = {Granularity::coarse, forecast.coarse_argmax[t]};
    } else {
      throw ValidationError("compose_output: selection entries must be 0 or 1");
    }
  }
  return out;
}

}  // namespace islands
