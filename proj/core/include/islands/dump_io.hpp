/*
 * Copyright 2026 The Islands Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "islands/forecast.hpp"
#include "islands/selector.hpp"
#include "islands/taxonomy.hpp"

namespace islands {

/// One line of a forecast dump.
struct ForecastRecord {
  std::string video_id;
  int observed = 0;      // t0
  int total_frames = 0;  // T
  std::vector<int> truth_fine;
  ForecastDistribution forecast;
};

/// JSON-lines forecast dump, one object per video:
///   {"id", "observed", "total_frames", "horizon", "truth_fine",
///    "fine_mean", "fine_var", "coarse_mean", "coarse_var"}
/// Matrices are arrays of per-frame arrays.
void save_forecast_dump(const std::filesystem::path& path, std::span<const ForecastRecord> records);
/// Throws ParseError (with line number) or ValidationError.
std::vector<ForecastRecord> load_forecast_dump(const std::filesystem::path& path, const Taxonomy& taxonomy);

/// JSON-lines selector dataset: {"id", "features", "labels", "truth_fine"}.
void save_selector_dataset(const std::filesystem::path& path, const SelectorDataset& data);
SelectorDataset load_selector_dataset(const std::filesystem::path& path, const Taxonomy& taxonomy);

}  // namespace islands
