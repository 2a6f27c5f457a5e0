/*
 * Copyright 2026 The Islands Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#include "islands/sequence.hpp"

#include <cmath>

#include "islands/error.hpp"

namespace islands {

std::vector<int> segments_to_frames(std::span<const Segment> segments) {
  if (segments.empty()) throw ValidationError("segments_to_frames: empty segment list");
  std::vector<int> frames;
  for (const auto& s : segments) {
    if (s.length < 1) throw ValidationError("segment length must be at least 1");
    frames.insert(frames.end(), static_cast<std::size_t>(s.length), s.action);
  }
  return frames;
}

std::vector<Segment> frames_to_segments(std::span<const int> frames) {
  if (frames.empty()) throw ValidationError("frames_to_segments: empty frame track");
  std::vector<Segment> segments;
  for (int label : frames) {
    if (!segments.empty() && segments.back().action == label) {
      ++segments.back().length;
    } else {
      segments.push_back({label, 1});
    }
  }
  return segments;
}

VideoSequence VideoSequence::from_frames(std::string id, std::vector<int> frames_fine, const Taxonomy& taxonomy,
                                         std::optional<nnet::Tensor2D> features) {
  if (frames_fine.empty()) throw ValidationError("video '" + id + "' has no frames");
  VideoSequence v;
  v.id_ = std::move(id);
  try {
    v.frames_coarse_ = taxonomy.coarsen(frames_fine);
  } catch (const std::out_of_range& e) {
    throw ValidationError("video '" + v.id_ + "': " + e.what());
  }
  v.segments_ = frames_to_segments(frames_fine);
  v.frames_fine_ = std::move(frames_fine);
  if (features) {
    if (features->rows() != v.length()) {
      throw ShapeError("video '" + v.id_ + "': feature rows " + std::to_string(features->rows()) +
                       " != frame count " + std::to_string(v.length()));
    }
    if (!features->all_finite()) throw NumericError("video '" + v.id_ + "': non-finite features");
  }
  v.features_ = std::move(features);
  return v;
}

VideoSequence VideoSequence::from_segments(std::string id, std::span<const Segment> segments,
                                           const Taxonomy& taxonomy, std::optional<nnet::Tensor2D> features) {
  return from_frames(std::move(id), segments_to_frames(segments), taxonomy, std::move(features));
}

ObservationSplit split_observation(int total_frames, double alpha, double horizon_fraction) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("observation fraction must lie in (0, 1)");
  if (!(horizon_fraction > 0.0 && horizon_fraction <= 1.0)) {
    throw ValidationError("horizon fraction must lie in (0, 1]");
  }
  ObservationSplit s;
  s.total_frames = total_frames;
  s.alpha = alpha;
  s.horizon_fraction = horizon_fraction;
  s.observed = static_cast<int>(std::floor(alpha * total_frames + 1e-9));
  if (s.observed < 1) {
    throw ValidationError("video of " + std::to_string(total_frames) + " frames is too short to observe " +
                          std::to_string(alpha));
  }
  s.horizon = static_cast<int>(std::floor(horizon_fraction * (total_frames - s.observed) + 1e-9));
  if (s.horizon < 1) {
    throw ValidationError("video of " + std::to_string(total_frames) + " frames leaves no frame to predict");
  }
  return s;
}

ObservationSplit split_observation(const VideoSequence& video, double alpha, double horizon_fraction) {
  try {
    return split_observation(video.length(), alpha, horizon_fraction);
  } catch (const ValidationError& e) {
    throw ValidationError("video '" + video.id() + "': " + e.what());
  }
}

}  // namespace islands
