/*
 * Copyright 2026 The Islands Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "islands/forecaster.hpp"
#include "islands/selector.hpp"

namespace islands::experiment {

enum class CorpusSource { grammar, annotations };

struct CorpusConfig {
  CorpusSource source = CorpusSource::grammar;
  std::filesystem::path grammar;      // source = grammar
  int videos = 200;                   // source = grammar
  std::filesystem::path annotations;  // source = annotations
};

struct SplitConfig {
  int folds = 5;
  double validation_fraction = 0.3;
};

struct ProtocolConfig {
  double alpha = 0.2;
  double horizon_fraction = 0.5;
};

struct ForecastStageConfig {
  std::vector<UncertaintyKind> modes{UncertaintyKind::ensemble, UncertaintyKind::mc_dropout, UncertaintyKind::bayesian};
  int ensemble_members = 3;
  int samples = 16;  // mc_dropout passes and bayesian logit samples at prediction time
  ForecasterConfig model;  // kind is overwritten per mode
};

struct SelectorStageConfig {
  UncertaintyKind forecast_mode = UncertaintyKind::bayesian;
  std::vector<SelectorVariant> variants{SelectorVariant::mlp, SelectorVariant::tcn};
  std::vector<double> gammas{0.0, 0.5, 1.0, 2.0, 4.0};
  int seeds = 3;
  /// Share of the selector videos held out for early stopping.
  double early_stop_fraction = 0.25;
  SelectorTrainConfig train;  // gamma is overwritten per grid point
};

struct TimelineConfig {
  std::vector<std::string> videos;  // empty: every video
  SelectorVariant variant = SelectorVariant::tcn;
  double beta = 1.0;
  int seed_index = 0;
};

struct ExperimentConfig {
  std::filesystem::path source_path;  // the config file itself, if any
  std::uint64_t seed = 0;
  std::filesystem::path taxonomy;
  CorpusConfig corpus;
  SplitConfig splits;
  ProtocolConfig protocol;
  ForecastStageConfig forecaster;
  SelectorStageConfig selector;
  std::vector<double> betas{0.25, 0.5, 1.0, 2.0, 4.0};
  TimelineConfig timeline;
  std::filesystem::path output{"out"};

  /// Throws ConfigError naming the offending key.
  void validate() const;
  /// Canonical JSON with every default filled in.
  nlohmann::ordered_json to_json() const;
  /// FNV-1a of the canonical JSON.
  std::uint64_t hash() const;
};

/// Parses a config document. Relative paths resolve against `base_dir`.
/// Every key except "seed" is optional; unknown keys are rejected.
ExperimentConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir);
ExperimentConfig load_config(const std::filesystem::path& path);

/// The defaults table as JSON (what an empty config plus a seed expands to).
nlohmann::ordered_json default_config_json();

}  // namespace islands::experiment
