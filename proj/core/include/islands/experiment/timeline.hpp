/*
 * Copyright 2026 The Islands Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <string>
#include <vector>

#include "islands/taxonomy.hpp"

namespace islands::experiment {

/// Aligned per-frame tracks for one video's forecast window.
struct TimelineData {
  std::string video_id;
  int observed = 0;
  std::vector<int> truth_fine;
  std::vector<int> fine_argmax;
  std::vector<int> coarse_argmax;
  std::vector<int> oracle;                   // 0 fine, 1 coarse
  std::vector<double> gammas;                // ascending
  std::vector<std::vector<int>> selections;  // one track per gamma

  /// Index into `gammas` of the first gamma selecting fine; -1 if none.
  std::vector<int> first_fine() const;
  /// 1 where the frame never returns to coarse after its first fine gamma.
  std::vector<int> monotone() const;
  void validate() const;
};

/// Columns: frame, truth_fine, truth_coarse, fine_argmax, coarse_argmax,
/// oracle, one "gamma=<g>" column per gamma, first_fine_gamma, monotone.
std::string timeline_csv(const TimelineData& data, const Taxonomy& taxonomy);

/// Stacked strip chart of the same tracks.
std::string timeline_svg(const TimelineData& data, const Taxonomy& taxonomy);

}  // namespace islands::experiment
