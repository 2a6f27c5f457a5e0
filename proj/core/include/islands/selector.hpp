/*
 * Copyright 2026 The Islands Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "islands/forecast.hpp"
#include "islands/metrics.hpp"
#include "islands/nnet/layers.hpp"
#include "islands/nnet/params.hpp"
#include "islands/taxonomy.hpp"

namespace islands {

// ---- labels and features ---------------------------------------------------

/// y[t] = 0 when the forecast's fine argmax equals the true label, else 1.
std::vector<int> derive_labels(const ForecastDistribution& forecast, std::span<const int> truth_fine);

/// One row per future frame: [fine mean | coarse mean], width C_f + C_c.
nnet::Tensor2D build_features(const ForecastDistribution& forecast);

/// Fine/coarse argmax tracks read back from a feature matrix.
std::vector<int> fine_argmax_from_features(const nnet::Tensor2D& features, const Taxonomy& taxonomy);
std::vector<int> coarse_argmax_from_features(const nnet::Tensor2D& features, const Taxonomy& taxonomy);

/// One selector training/evaluation example.
struct SelectorSample {
  std::string video_id;
  nnet::Tensor2D features;      // horizon x (C_f + C_c)
  std::vector<int> labels;      // y
  std::vector<int> truth_fine;  // needed for weighted-accuracy validation

  void validate(const Taxonomy& taxonomy) const;
};

using SelectorDataset = std::vector<SelectorSample>;

SelectorSample make_selector_sample(std::string video_id, const ForecastDistribution& forecast,
                                    std::vector<int> truth_fine);

/// Per-frame selector output.
struct GranularityTrack {
  nnet::Tensor2D probabilities;  // horizon x 2: [p(fine), p(coarse)]
  std::vector<int> selection;    // 0 fine, 1 coarse; ties go to fine
};

/// Selection track from probability pairs.
std::vector<int> select_from_probabilities(const nnet::Tensor2D& probabilities);

/// Fine wherever the fine argmax is right, coarse elsewhere (one-hot pairs).
GranularityTrack oracle_selector(const ForecastDistribution& forecast, std::span<const int> truth_fine);

/// Mixed-granularity output: label index at the chosen level per frame.
struct MixedLabel {
  Granularity level = Granularity::fine;
  int label = 0;
  friend bool operator==(const MixedLabel&, const MixedLabel&) = default;
};

std::vector<MixedLabel> compose_output(std::span<const int> selection, const ForecastDistribution& forecast);

// ---- loss ------------------------------------------------------------------

/// Which frames the granularity term covers.
enum class IndicatorMode {
  truth,      // frames whose true granularity is fine (y = 0)
  predicted,  // frames the selector currently calls fine
};

/// How the granularity term is normalised per video.
enum class GranularityNorm {
  restricted,  // mean over the covered frames
  horizon,     // sum over the covered frames divided by the horizon length
};

struct SelectorLossOptions {
  double gamma = 0.0;
  IndicatorMode indicator = IndicatorMode::truth;
  GranularityNorm norm = GranularityNorm::restricted;
};

struct SelectorLoss {
  double accuracy_term = 0.0;     // L_A
  double granularity_term = 0.0;  // L_G
  double total = 0.0;             // L_A + gamma * L_G
};

/// Losses for probability pairs, averaged over videos. Throws
/// ValidationError on length mismatch or gamma < 0.
SelectorLoss selector_loss(std::span<const nnet::Tensor2D> probabilities, std::span<const std::vector<int>> labels,
                           const SelectorLossOptions& options);

/// Same loss evaluated from 2-way logits; writes dL/dlogits per video into
/// `grads` (resized to match) when non-null.
SelectorLoss selector_loss_from_logits(std::span<const nnet::Tensor2D> logits, std::span<const std::vector<int>> labels,
                                       const SelectorLossOptions& options, std::vector<nnet::Tensor2D>* grads);

// ---- models ----------------------------------------------------------------

enum class SelectorVariant { mlp, tcn };

std::string to_string(SelectorVariant variant);
SelectorVariant parse_selector_variant(std::string_view name);

struct SelectorArch {
  SelectorVariant variant = SelectorVariant::tcn;
  /// MLP hidden width (both layers).
  int hidden = 32;
  /// TCN channel count, residual blocks and kernel width; block l uses
  /// dilation 2^l.
  int channels = 32;
  int blocks = 4;
  int kernel = 3;

  void validate() const;
  std::vector<int> dilations() const;
};

nlohmann::json to_json(const SelectorArch& arch);
SelectorArch selector_arch_from_json(const nlohmann::json& j);

/// Per-frame 2-way classifier over the feature matrix.
///   mlp: relu(dense) -> relu(dense) -> dense, frame by frame
///   tcn: 1x1 projection, then residual blocks x + W1 relu(conv_d(x)), then 1x1 output
class SelectorModel {
 public:
  struct Cache {
    nnet::Tensor2D input;
    std::vector<nnet::Tensor2D> acts;  // variant-specific intermediates
  };

  SelectorModel(const SelectorArch& arch, int input_dim, std::uint64_t init_seed);

  const SelectorArch& arch() const noexcept { return arch_; }
  int input_dim() const noexcept { return input_dim_; }
  nnet::ParamStore& params() noexcept { return params_; }
  const nnet::ParamStore& params() const noexcept { return params_; }

  /// horizon x 2 logits. Fills `cache` for a later backward pass when non-null.
  nnet::Tensor2D logits(const nnet::Tensor2D& features, Cache* cache = nullptr) const;
  /// Accumulates parameter gradients for dL/dlogits.
  void backward(const Cache& cache, const nnet::Tensor2D& dlogits);

  GranularityTrack select(const nnet::Tensor2D& features) const;

 private:
  SelectorArch arch_;
  int input_dim_;
  nnet::ParamStore params_;
  std::vector<nnet::Dense> dense_;       // mlp: 3 layers; tcn: input projection, per-block 1x1, output
  std::vector<nnet::ParamId> conv_w_;    // tcn only
  std::vector<nnet::ParamId> conv_b_;
};

// ---- training --------------------------------------------------------------

struct SelectorTrainConfig {
  SelectorArch arch;
  SelectorLossOptions loss;
  int epochs = 60;
  double learning_rate = 3e-3;
  /// Videos per minibatch.
  int batch_size = 8;
  /// Epochs without validation improvement before a beta's snapshot freezes.
  int patience = 10;
  double grad_clip = 5.0;

  void validate() const;
};

/// Best snapshot for one early-stopping beta.
struct SelectorFit {
  double beta = 1.0;
  int best_epoch = -1;
  double best_validation = 0.0;
  SelectorModel model;
};

/// Trains one model and keeps, for each beta, the parameters with the best
/// validation weighted accuracy (first epoch wins ties). A beta stops
/// improving after `patience` epochs without progress; training ends when
/// every beta has stopped or the epoch budget is spent. Each fit is the model
/// a separate run early-stopped on that beta would return. Throws
/// ValidationError for empty data or no betas and NumericError on a
/// non-finite loss.
std::vector<SelectorFit> train_selector_multi(const SelectorDataset& train, const SelectorDataset& validation,
                                              const SelectorTrainConfig& config, std::span<const double> betas,
                                              std::uint64_t seed, const Taxonomy& taxonomy);

SelectorModel train_selector(const SelectorDataset& train, const SelectorDataset& validation,
                             const SelectorTrainConfig& config, double beta, std::uint64_t seed,
                             const Taxonomy& taxonomy);

/// Corpus tally of a selector (or any selection function) over a dataset.
WeightedTally evaluate_selector(const SelectorModel& model, const SelectorDataset& data, const Taxonomy& taxonomy);
/// Tally with every frame fine (`level` = fine) or every frame coarse.
WeightedTally evaluate_constant(const SelectorDataset& data, Granularity level, const Taxonomy& taxonomy);
/// Tally of the oracle selection (the labels y).
WeightedTally evaluate_oracle(const SelectorDataset& data, const Taxonomy& taxonomy);

/// `<stem>.ckpt` + `<stem>.json`.
void save_selector(const std::filesystem::path& stem, const SelectorModel& model, const nlohmann::json& extra = {});
SelectorModel load_selector(const std::filesystem::path& stem);

}  // namespace islands
