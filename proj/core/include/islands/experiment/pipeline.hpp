/*
 * Copyright 2026 The Islands Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "islands/dump_io.hpp"
#include "islands/error.hpp"
#include "islands/experiment/config.hpp"
#include "islands/sequence.hpp"
#include "islands/splits.hpp"
#include "islands/taxonomy.hpp"

namespace islands::experiment {

/// Failure inside a pipeline stage; the message starts with "[stage]".
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what)
      : Error("[" + stage + "] " + what), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

struct RunOptions {
  int jobs = 1;
};

/// Materialised data stage (out/data).
struct DataBundle {
  Taxonomy taxonomy;
  Corpus corpus;
  std::vector<Fold> folds;
  std::map<int, std::string> regions;  // fine label -> grammar region (grammar corpora only)
};

// Stage entry points. Each reads the previous stage's artifacts from
// config.output and throws StageError on failure.
void gen_data(const ExperimentConfig& config, const RunOptions& options = {});
void train_forecasters(const ExperimentConfig& config, const RunOptions& options = {});
void train_selectors(const ExperimentConfig& config, const RunOptions& options = {});
void sweep(const ExperimentConfig& config, const RunOptions& options = {});
/// Empty `videos` falls back to config.timeline.videos, then to every video.
void timeline(const ExperimentConfig& config, const std::vector<std::string>& videos, const RunOptions& options = {});
void uncertainty_report(const ExperimentConfig& config, const RunOptions& options = {});
void score(const ExperimentConfig& config, const RunOptions& options = {});
/// Every stage in order.
void run_all(const ExperimentConfig& config, const RunOptions& options = {});

// Artifact locations and loaders.
DataBundle load_data(const ExperimentConfig& config);
std::filesystem::path forecast_dump_path(const ExperimentConfig& config, int fold, UncertaintyKind mode,
                                         const std::string& split);
std::filesystem::path selector_stem(const ExperimentConfig& config, int fold, SelectorVariant variant, double gamma,
                                    int seed_index, double beta);
/// "%g"-style rendering used in paths and report cells.
std::string format_grid_value(double v);

}  // namespace islands::experiment
