/*
 * Copyright 2026 The Islands Authors
 * SPDX-License-Identifier: Apache-2.0
 */

// islands: command-line driver for the experiment stages.

#include <cstdint>
#include <cstdlib>
#include <optional>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "islands/error.hpp"
#include "islands/experiment/config.hpp"
#include "islands/experiment/pipeline.hpp"

namespace ex = islands::experiment;

namespace {

struct GlobalFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  int jobs = 1;
};

ex::ExperimentConfig resolve(const GlobalFlags& flags) {
  if (flags.config.empty()) throw islands::ConfigError("--config", "a config file is required");
  ex::ExperimentConfig config = ex::load_config(flags.config);
  if (flags.seed) config.seed = *flags.seed;
  if (!flags.out.empty()) config.output = flags.out;
  config.validate();
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"islands: granularity-aware dense action forecasting experiments"};
  app.require_subcommand(1);
  GlobalFlags flags;
  app.add_option("--config", flags.config, "experiment config (JSON)");
  app.add_option("--seed", flags.seed, "override the config seed");
  app.add_option("--out", flags.out, "override the output directory");
  app.add_option("--jobs", flags.jobs, "worker threads")->check(CLI::PositiveNumber);

  std::vector<std::string> videos;
  auto* gen = app.add_subcommand("gen-data", "generate or load the corpus and folds");
  auto* fc = app.add_subcommand("train-forecaster", "train forecasters and write forecast dumps");
  auto* sel = app.add_subcommand("train-selector", "train granularity selectors over the gamma grid");
  auto* sw = app.add_subcommand("sweep", "gamma x beta heatmaps on the early-stopping split");
  auto* tl = app.add_subcommand("timeline", "per-video island timelines (CSV + SVG)");
  tl->add_option("videos", videos, "video ids (default: config, then every video)");
  auto* unc = app.add_subcommand("uncertainty-report", "NLL and MSE_NLL per uncertainty mode");
  auto* sc = app.add_subcommand("score", "aggregate score tables");
  auto* all = app.add_subcommand("run", "every stage in order");
  auto* defaults = app.add_subcommand("defaults", "print the defaults table as JSON");

  CLI11_PARSE(app, argc, argv);

  try {
    if (defaults->parsed()) {
      std::cout << ex::default_config_json().dump(2) << "\n";
      return EXIT_SUCCESS;
    }
    const ex::ExperimentConfig config = resolve(flags);
    const ex::RunOptions options{flags.jobs};
    if (gen->parsed()) ex::gen_data(config, options);
    if (fc->parsed()) ex::train_forecasters(config, options);
    if (sel->parsed()) ex::train_selectors(config, options);
    if (sw->parsed()) ex::sweep(config, options);
    if (tl->parsed()) ex::timeline(config, videos, options);
    if (unc->parsed()) ex::uncertainty_report(config, options);
    if (sc->parsed()) ex::score(config, options);
    if (all->parsed()) ex::run_all(config, options);
  } catch (const ex::StageError& e) {
    std::cerr << "islands: " << e.what() << "\n";
    return 2;
  } catch (const islands::ConfigError& e) {
    std::cerr << "islands: [config] " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "islands: [config] " << e.what() << "\n";
    return 2;
  }
  return EXIT_SUCCESS;
}
