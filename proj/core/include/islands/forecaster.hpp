/*
 * Copyright 2026 The Islands Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "islands/forecast.hpp"
#include "islands/nnet/gru.hpp"
#include "islands/nnet/layers.hpp"
#include "islands/nnet/params.hpp"
#include "islands/random.hpp"
#include "islands/sequence.hpp"
#include "islands/taxonomy.hpp"

namespace islands {

enum class UncertaintyKind { ensemble, mc_dropout, bayesian };

std::string to_string(UncertaintyKind kind);
/// Accepts "ensemble", "mc_dropout" (or "dropout") and "bayesian".
UncertaintyKind parse_uncertainty_kind(std::string_view name);

/// What fills the label block of an observed segment row.
enum class ContextInput { features, labels };
ContextInput parse_context_input(std::string_view name);

/// How predictive uncertainty is produced at inference time.
struct UncertaintyMode {
  UncertaintyKind kind = UncertaintyKind::bayesian;
  /// Ensemble members K, or stochastic passes / logit samples S.
  int count = 1;
  /// Test-time dropout rate (mc_dropout only).
  double dropout_rate = 0.0;

  static UncertaintyMode ensemble(int members) { return {UncertaintyKind::ensemble, members, 0.0}; }
  static UncertaintyMode mc_dropout(int samples, double rate) { return {UncertaintyKind::mc_dropout, samples, rate}; }
  static UncertaintyMode bayesian(int samples) { return {UncertaintyKind::bayesian, samples, 0.0}; }

  /// Throws ValidationError when count < 1 or the dropout rate is outside [0, 1).
  void validate() const;
};

struct ForecasterConfig {
  /// Training objective: plain cross entropy (ensemble), cross entropy under
  /// dropout (mc_dropout) or cross entropy of the mean softmax over Gaussian
  /// logit samples (bayesian).
  UncertaintyKind kind = UncertaintyKind::bayesian;
  int hidden = 32;
  int epochs = 60;
  double learning_rate = 5e-3;
  int batch_size = 16;
  double dropout_rate = 0.2;
  /// Gaussian logit samples in the bayesian training loss.
  int loss_samples = 16;
  double duration_weight = 1.0;
  double grad_clip = 5.0;
  double weight_decay = 0.3;
  /// Observation fractions used to cut training sequences from each video.
  std::vector<double> train_alphas{0.1, 0.2, 0.3, 0.4, 0.5};
  int max_segments = 50;
  /// Epochs without validation-loss improvement before training stops; 0
  /// trains for the full budget. Needs a validation corpus.
  int patience = 15;
  ContextInput context_input = ContextInput::features;

  void validate() const;
};

nlohmann::json to_json(const ForecasterConfig& config);
ForecasterConfig forecaster_config_from_json(const nlohmann::json& j);

/// The observed prefix of a video encoded as one input row per observed
/// segment: [label block (C_f) | length/T | start/T | end/T]. The label block
/// is the mean feature vector over the segment when `input` is features and the
/// video has features of dimension C_f, otherwise the one-hot label.
struct ObservedContext {
  nnet::Tensor2D inputs;
  int observed_frames = 0;
  int total_frames = 0;
};

ObservedContext make_context(const VideoSequence& video, const ObservationSplit& split, int num_classes,
                             ContextInput input = ContextInput::features);

/// Teacher-forced training example: observed context plus the future segments.
struct TrainingSequence {
  ObservedContext context;
  std::vector<int> actions;       // future segment labels
  std::vector<int> lengths;       // future segment frame counts
  std::vector<double> fractions;  // length / frames remaining at segment start
};

TrainingSequence make_training_sequence(const VideoSequence& video, const ObservationSplit& split, int num_classes,
                                        ContextInput input = ContextInput::features);

/// Options for a single loss evaluation.
struct LossOptions {
  UncertaintyKind kind = UncertaintyKind::bayesian;
  int samples = 16;
  double dropout_rate = 0.0;
  double duration_weight = 1.0;
  /// Replaces the variance head output with 0 (bayesian collapses to point CE).
  bool force_zero_variance = false;
};

struct RolloutOptions {
  /// Apply a fresh dropout mask to the hidden state at every step.
  bool dropout = false;
  double dropout_rate = 0.0;
  /// Draw the logits from N(mu, sigma) instead of using mu.
  bool sample_logits = false;
  /// Feed this label back after the first predicted segment instead of its argmax.
  std::optional<int> first_feedback_override;
  int max_segments = 50;
};

/// Autoregressive segment forecaster: a recurrent cell over segment rows with
/// three heads reading the hidden state: action mean logits, action logit
/// standard deviation (softplus) and duration fraction (sigmoid).
class Forecaster {
 public:
  Forecaster(int num_classes, int hidden, std::uint64_t init_seed);

  int num_classes() const noexcept { return classes_; }
  int hidden() const noexcept { return hidden_; }
  int input_dim() const noexcept { return classes_ + 3; }

  nnet::ParamStore& params() noexcept { return params_; }
  const nnet::ParamStore& params() const noexcept { return params_; }

  /// Mean loss over the future segments of one sequence. When `accumulate` is
  /// set, gradients scaled by `grad_scale` are added to the parameter store.
  /// `rng` drives logit noise and dropout masks.
  double sequence_loss(const TrainingSequence& seq, const LossOptions& options, Rng& rng, bool accumulate,
                       double grad_scale = 1.0);

  /// Predicts segments until they cover `horizon` frames (or max_segments),
  /// feeding each segment's argmax label back as the next input.
  std::vector<SegmentDistribution> rollout(const ObservedContext& context, int horizon, const RolloutOptions& options,
                                           Rng& rng) const;

 private:
  struct Heads {
    nnet::Tensor2D mean;
    nnet::Tensor2D sigma_raw;
    nnet::Tensor2D duration_logit;
  };
  Heads heads(const nnet::Tensor2D& h) const;

  int classes_;
  int hidden_;
  nnet::ParamStore params_;
  nnet::GruCell cell_;
  nnet::Dense mean_head_;
  nnet::Dense sigma_head_;
  nnet::Dense duration_head_;
};

/// Builds training sequences (one per video and alpha) and fits a model.
/// Throws ValidationError for an empty corpus and NumericError (with epoch and
/// batch) on a non-finite loss. Deterministic in (corpus, config, seed).
Forecaster train_forecaster(const Corpus& train, const ForecasterConfig& config, std::uint64_t seed,
                            const Taxonomy& taxonomy);

/// As above, returning the epoch with the lowest loss on `validation`
/// sequences (cut at the same alphas). Training stops after `patience`
/// epochs without improvement when patience > 0.
Forecaster train_forecaster(const Corpus& train, const Corpus& validation, const ForecasterConfig& config,
                            std::uint64_t seed, const Taxonomy& taxonomy);

/// Predictive distribution over the next `horizon` frames:
///   ensemble   one deterministic rollout per model (models.size() must be K)
///   mc_dropout S rollouts of models[0] with test-time dropout
///   bayesian   S rollouts of models[0] with logits drawn from N(mu, sigma)
/// Frame tracks are aggregated by empirical mean and variance.
ForecastDistribution predict_future(std::span<const Forecaster* const> models, const ObservedContext& context,
                                    int horizon, const UncertaintyMode& mode, std::uint64_t seed,
                                    const Taxonomy& taxonomy, int max_segments = 50);

/// Metadata written next to a checkpoint.
struct ForecasterInfo {
  UncertaintyKind kind = UncertaintyKind::bayesian;
  std::uint64_t seed = 0;
  std::uint64_t taxonomy_fingerprint = 0;
  ForecasterConfig config;
};

/// Writes `<stem>.ckpt` (tensors) and `<stem>.json` (architecture sidecar).
void save_forecaster(const std::filesystem::path& stem, const Forecaster& model, const ForecasterInfo& info);
Forecaster load_forecaster(const std::filesystem::path& stem, ForecasterInfo* info = nullptr);

}  // namespace islands
