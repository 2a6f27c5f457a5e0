/*
 * Copyright 2026 The Islands Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <span>
#include <vector>

#include "islands/nnet/tensor.hpp"
#include "islands/taxonomy.hpp"

namespace islands {

/// Per-frame class probabilities, horizon x C. Rows sum to 1.
using ProbabilityTrack = nnet::Tensor2D;

/// Index of the largest entry; ties resolve to the lowest index.
int argmax(std::span<const double> values) noexcept;
std::vector<int> argmax_rows(const nnet::Tensor2D& track);

/// Per-future-frame predictive mean and variance at both granularities.
struct ForecastDistribution {
  int horizon = 0;
  nnet::Tensor2D fine_mean;    // horizon x C_f
  nnet::Tensor2D fine_var;     // horizon x C_f
  nnet::Tensor2D coarse_mean;  // horizon x C_c
  nnet::Tensor2D coarse_var;   // horizon x C_c
  std::vector<int> fine_argmax;
  std::vector<int> coarse_argmax;

  /// Throws ValidationError unless every mean row sums to 1 within `tolerance`,
  /// means lie in [0, 1], variances are non-negative and the shapes agree.
  void validate(double tolerance = 1e-6) const;
};

/// Builds the coarse level (group sums of means, group sums of variances)
/// and the argmax caches from a fine-level mean/variance pair.
ForecastDistribution make_forecast(nnet::Tensor2D fine_mean, nnet::Tensor2D fine_var, const Taxonomy& taxonomy);

/// Population mean and variance across member tracks, per frame and class.
/// Variances are computed relative to the first member, so identical members
/// give exactly zero variance.
ForecastDistribution aggregate_tracks(std::span<const ProbabilityTrack> tracks, const Taxonomy& taxonomy);

/// One predicted segment: a class distribution and the fraction of the
/// still-unexplained video it occupies.
struct SegmentDistribution {
  std::vector<double> probabilities;
  double duration = 1.0;
};

/// Frames given to a segment with duration fraction `duration` when
/// `remaining` frames of the video are still unexplained: max(1, round(d * r)).
int segment_frames(double duration, int remaining) noexcept;

/// Repeats each segment's distribution over its frames until `horizon` frames
/// are filled; the last segment is extended if the predictions run out.
/// `remaining` is the number of unobserved frames in the video (defaults to
/// the horizon). Throws ValidationError for horizon < 1 or no segments.
ProbabilityTrack expand_segments_to_frames(std::span<const SegmentDistribution> segments, int horizon,
                                           int remaining = 0);

}  // namespace islands
