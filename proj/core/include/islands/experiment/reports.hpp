/*
 * Copyright 2026 The Islands Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "islands/metrics.hpp"

namespace islands::experiment {

/// Fixed six-decimal rendering used in every CSV cell.
std::string fmt(double v);

/// Minimal CSV builder; cells containing ',', '"' or newlines are quoted.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);
  CsvWriter& row(const std::vector<std::string>& cells);
  const std::string& str() const noexcept { return text_; }

 private:
  std::size_t width_;
  std::string text_;
};

/// One scored selection: a trained selector or a baseline rule.
struct ScoreRow {
  std::string experiment;
  int fold = 0;
  std::string split;     // "test" or "validation"
  std::string selector;  // "mlp", "tcn", "all_fine", "all_coarse", "oracle"
  double gamma = 0.0;    // NaN for baselines
  double beta = 1.0;
  int seed = -1;         // -1 for baselines
  int best_epoch = -1;
  WeightedTally tally;
};

/// Column order of report.csv and baselines.csv.
const std::vector<std::string>& score_columns();
std::vector<std::string> score_cells(const ScoreRow& row);
nlohmann::ordered_json to_json(const ScoreRow& row);
ScoreRow score_row_from_json(const nlohmann::json& j);

/// Rows are gammas, columns betas; `cell(i, j)` supplies the value.
template <class Fn>
std::string heatmap_csv(const std::vector<double>& gammas, const std::vector<double>& betas, Fn&& cell);

std::string grid_label(double v);

/// Rank correlation with average ranks for ties. NaN when either side is
/// constant or the sizes differ.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

template <class Fn>
std::string heatmap_csv(const std::vector<double>& gammas, const std::vector<double>& betas, Fn&& cell) {
  std::vector<std::string> header{"gamma"};
  for (double b : betas) header.push_back("beta=" + grid_label(b));
  CsvWriter csv(header);
  for (std::size_t i = 0; i < gammas.size(); ++i) {
    std::vector<std::string> cells{grid_label(gammas[i])};
    for (std::size_t j = 0; j < betas.size(); ++j) cells.push_back(fmt(cell(i, j)));
    csv.row(cells);
  }
  return csv.str();
}

}  // namespace islands::experiment
