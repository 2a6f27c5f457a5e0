/*
 * Copyright 2026 The Islands Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "islands/nnet/tensor.hpp"
#include "islands/taxonomy.hpp"

namespace islands {

/// One run of a single fine action.
struct Segment {
  int action = 0;
  int length = 1;

  friend bool operator==(const Segment&, const Segment&) = default;
};

/// Run-length expansion. Throws ValidationError on empty input or length < 1.
std::vector<int> segments_to_frames(std::span<const Segment> segments);
/// Run-length encoding; equal neighbours merge. Throws on empty input.
std::vector<Segment> frames_to_segments(std::span<const int> frames);

/// An annotated video: fine frame labels, derived coarse labels and optional
/// per-frame features (T x D). Storage is 0-based.
class VideoSequence {
 public:
  static VideoSequence from_frames(std::string id, std::vector<int> frames_fine, const Taxonomy& taxonomy,
                                   std::optional<nnet::Tensor2D> features = std::nullopt);
  static VideoSequence from_segments(std::string id, std::span<const Segment> segments, const Taxonomy& taxonomy,
                                     std::optional<nnet::Tensor2D> features = std::nullopt);

  const std::string& id() const noexcept { return id_; }
  int length() const noexcept { return static_cast<int>(frames_fine_.size()); }
  const std::vector<Segment>& segments() const noexcept { return segments_; }
  const std::vector<int>& frames_fine() const noexcept { return frames_fine_; }
  const std::vector<int>& frames_coarse() const noexcept { return frames_coarse_; }
  const std::optional<nnet::Tensor2D>& features() const noexcept { return features_; }

  friend bool operator==(const VideoSequence&, const VideoSequence&) = default;

 private:
  VideoSequence() = default;

  std::string id_;
  std::vector<Segment> segments_;
  std::vector<int> frames_fine_;
  std::vector<int> frames_coarse_;
  std::optional<nnet::Tensor2D> features_;
};

using Corpus = std::vector<VideoSequence>;

/// Observed prefix [0, observed) and predicted window [observed, observed + horizon).
struct ObservationSplit {
  int total_frames = 0;
  int observed = 0;  // t0
  int horizon = 0;   // h
  double alpha = 0.0;
  double horizon_fraction = 0.0;

  int future_begin() const noexcept { return observed; }
  int future_end() const noexcept { return observed + horizon; }
  int remaining() const noexcept { return total_frames - observed; }
};

/// t0 = floor(alpha * T), h = floor(horizon_fraction * (T - t0)). Throws
/// ValidationError for fractions out of range or when t0 or h would be 0.
ObservationSplit split_observation(int total_frames, double alpha, double horizon_fraction);
ObservationSplit split_observation(const VideoSequence& video, double alpha, double horizon_fraction);

}  // namespace islands
