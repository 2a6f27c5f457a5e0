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

enum class Granularity : int { fine = 0, coarse = 1 };

/// Frame counts behind a weighted accuracy; sums over videos.
struct WeightedTally {
  long frames = 0;
  long fine_selected = 0;
  long fine_credited = 0;    // fine selected and the fine argmax is right
  long coarse_selected = 0;
  long coarse_credited = 0;  // coarse selected and the coarse argmax is right

  WeightedTally& operator+=(const WeightedTally& other) noexcept;

  /// (fine_credited + beta * coarse_credited) / (frames * max(1, beta)).
  double weighted(double beta) const;
  /// Fraction of all frames credited at the fine level.
  double fine_accuracy() const noexcept;
  /// Fraction of all frames credited at the coarse level.
  double coarse_accuracy() const noexcept;
  double fraction_coarse() const noexcept;
};

/// Per-frame credit bookkeeping for a mixed-granularity output. `selection`
/// holds 0 (fine) or 1 (coarse) per frame.
WeightedTally tally_selection(std::span<const int> selection, std::span<const int> fine_argmax,
                              std::span<const int> coarse_argmax, std::span<const int> truth_fine,
                              const Taxonomy& taxonomy);

/// Credit 1 for a right fine pick, beta for a right coarse pick, 0 otherwise,
/// summed and divided by T * max(1, beta). Throws ValidationError for
/// mismatched lengths, an empty track or beta <= 0.
double weighted_accuracy(std::span<const int> selection, std::span<const int> fine_argmax,
                         std::span<const int> coarse_argmax, std::span<const int> truth_fine,
                         const Taxonomy& taxonomy, double beta);

/// Per-class frame accuracy averaged over the classes present in `truth`.
double moc_accuracy(std::span<const int> predicted, std::span<const int> truth, const Taxonomy& taxonomy);

/// Per-frame -log(p[truth]) with the probability floor.
std::vector<double> frame_nll(const nnet::Tensor2D& probabilities, std::span<const int> truth);
/// Mean of frame_nll.
double nll(const nnet::Tensor2D& probabilities, std::span<const int> truth);

/// Linear interpolation of every class column onto `length` evenly spaced
/// points, then per-frame renormalisation. Returns an exact copy when the
/// length already matches. Throws ValidationError when length < rows.
nnet::Tensor2D interpolate_to_length(const nnet::Tensor2D& track, int length);

/// Labels as one-hot rows.
nnet::Tensor2D one_hot_track(std::span<const int> labels, int num_classes);

/// All tracks are stretched to the longest one; result is the mean over
/// videos of the mean over frames of the squared distance between the
/// predicted and true probability vectors.
double mse_nll(std::span<const nnet::Tensor2D> predicted, std::span<const nnet::Tensor2D> truth);

}  // namespace islands
