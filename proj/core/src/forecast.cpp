/*
 * Copyright 2026 The Islands Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#include "islands/forecast.hpp"

#include <algorithm>
#include <cmath>

#include "islands/error.hpp"

namespace islands {

int argmax(std::span<const double> values) noexcept {
  int best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  }
  return best;
}

std::vector<int> argmax_rows(const nnet::Tensor2D& track) {
  std::vector<int> out(static_cast<std::size_t>(track.rows()));
  for (int t = 0; t < track.rows(); ++t) out[static_cast<std::size_t>(t)] = argmax(track.row(t));
  return out;
}

void ForecastDistribution::validate(double tolerance) const {
  const auto check_level = [&](const nnet::Tensor2D& mean, const nnet::Tensor2D& var, const char* level) {
    if (mean.rows() != horizon || !mean.same_shape(var)) {
      throw ValidationError(std::string("forecast ") + level + " level has shape " + mean.shape_string() + "/" +
                            var.shape_string() + " for horizon " + std::to_string(horizon));
    }
    for (int t = 0; t < mean.rows(); ++t) {
      double sum = 0.0;
      for (int c = 0; c < mean.cols(); ++c) {
        const double m = mean(t, c);
        if (!(m >= -tolerance && m <= 1.0 + tolerance)) {
          throw ValidationError(std::string("forecast ") + level + " mean outside [0,1] at frame " + std::to_string(t));
        }
        if (!(var(t, c) >= 0.0)) {
          throw ValidationError(std::string("forecast ") + level + " variance negative at frame " + std::to_string(t));
        }
        sum += m;
      }
      if (std::abs(sum - 1.0) > tolerance) {
        throw ValidationError(std::string("forecast ") + level + " mean sums to " + std::to_string(sum) +
                              " at frame " + std::to_string(t));
      }
    }
  };
  check_level(fine_mean, fine_var, "fine");
  check_level(coarse_mean, coarse_var, "coarse");
  if (fine_argmax.size() != static_cast<std::size_t>(horizon) ||
      coarse_argmax.size() != static_cast<std::size_t>(horizon)) {
    throw ValidationError("forecast argmax caches do not match the horizon");
  }
}

ForecastDistribution make_forecast(nnet::Tensor2D fine_mean, nnet::Tensor2D fine_var, const Taxonomy& taxonomy) {
  nnet::require_same_shape(fine_mean, fine_var, "make_forecast");
  if (fine_mean.cols() != taxonomy.fine_count()) {
    throw ShapeError("forecast has " + std::to_string(fine_mean.cols()) + " classes, taxonomy has " +
                     std::to_string(taxonomy.fine_count()));
  }
  ForecastDistribution f;
  f.horizon = fine_mean.rows();
  f.coarse_mean = nnet::Tensor2D(f.horizon, taxonomy.coarse_count());
  f.coarse_var = nnet::Tensor2D(f.horizon, taxonomy.coarse_count());
  const auto& map = taxonomy.map();
  for (int t = 0; t < f.horizon; ++t) {
    for (int c = 0; c < fine_mean.cols(); ++c) {
      const int g = map[static_cast<std::size_t>(c)];
      f.coarse_mean(t, g) += fine_mean(t, c);
      f.coarse_var(t, g) += fine_var(t, c);
    }
  }
  f.fine_argmax = argmax_rows(fine_mean);
  f.coarse_argmax = argmax_rows(f.coarse_mean);
  f.fine_mean = std::move(fine_mean);
  f.fine_var = std::move(fine_var);
  return f;
}

ForecastDistribution aggregate_tracks(std::span<const ProbabilityTrack> tracks, const Taxonomy& taxonomy) {
  if (tracks.empty()) throw ValidationError("aggregate_tracks: no member tracks");
  const auto& first = tracks.front();
  for (const auto& t : tracks) nnet::require_same_shape(first, t, "aggregate_tracks");
  const double m = static_cast<double>(tracks.size());
  nnet::Tensor2D mean(first.rows(), first.cols());
  nnet::Tensor2D var(first.rows(), first.cols());
  for (std::size_t i = 0; i < first.size(); ++i) {
    const double x0 = first.values()[i];
    double s = 0.0;
    double sq = 0.0;
    for (const auto& t : tracks) {
      const double d = t.values()[i] - x0;
      s += d;
      sq += d * d;
    }
    const double shift = s / m;
    mean.values()[i] = x0 + shift;
    var.values()[i] = std::max(0.0, sq / m - shift * shift);
  }
  return make_forecast(std::move(mean), std::move(var), taxonomy);
}

int segment_frames(double duration, int remaining) noexcept {
  const long n = std::lround(duration * static_cast<double>(remaining));
  return static_cast<int>(std::max(1L, n));
}

ProbabilityTrack expand_segments_to_frames(std::span<const SegmentDistribution> segments, int horizon,
                                           int remaining) {
  if (horizon < 1) throw ValidationError("expand_segments_to_frames: horizon must be at least 1");
  if (segments.empty()) throw ValidationError("expand_segments_to_frames: no segments");
  if (remaining <= 0) remaining = horizon;
  if (remaining < horizon) throw ValidationError("expand_segments_to_frames: remaining frames shorter than horizon");
  const int classes = static_cast<int>(segments.front().probabilities.size());
  ProbabilityTrack track(horizon, classes);
  int t = 0;
  int rem = remaining;
  const SegmentDistribution* last = &segments.front();
  for (const auto& seg : segments) {
    if (static_cast<int>(seg.probabilities.size()) != classes) {
      throw ShapeError("expand_segments_to_frames: segments disagree on class count");
    }
    last = &seg;
    const int len = segment_frames(seg.duration, rem);
    const int stop = std::min(horizon, t + len);
    for (; t < stop; ++t) std::copy(seg.probabilities.begin(), seg.probabilities.end(), track.row(t).begin());
    rem -= len;
    if (t >= horizon) break;
  }
  for (; t < horizon; ++t) std::copy(last->probabilities.begin(), last->probabilities.end(), track.row(t).begin());
  return track;
}

}  // namespace islands
