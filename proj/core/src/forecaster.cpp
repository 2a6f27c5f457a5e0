/*
 * Copyright 2026 The Islands Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#include "islands/forecaster.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "io_util.hpp"
#include "islands/error.hpp"
#include "islands/nnet/checkpoint.hpp"
#include "islands/nnet/loss.hpp"
#include "islands/nnet/optim.hpp"

namespace islands {

std::string to_string(UncertaintyKind kind) {
  switch (kind) {
    case UncertaintyKind::ensemble:
      return "ensemble";
    case UncertaintyKind::mc_dropout:
      return "mc_dropout";
    case UncertaintyKind::bayesian:
      return "bayesian";
  }
  return "unknown";
}

ContextInput parse_context_input(std::string_view name) {
  if (name == "features") return ContextInput::features;
  if (name == "labels") return ContextInput::labels;
  throw ValidationError("unknown context input '" + std::string(name) + "'");
}

UncertaintyKind parse_uncertainty_kind(std::string_view name) {
  if (name == "ensemble") return UncertaintyKind::ensemble;
  if (name == "mc_dropout" || name == "dropout") return UncertaintyKind::mc_dropout;
  if (name == "bayesian") return UncertaintyKind::bayesian;
  throw ValidationError("unknown uncertainty mode '" + std::string(name) + "'");
}

void UncertaintyMode::validate() const {
  if (count < 1) throw ValidationError("uncertainty mode needs at least one member or sample");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ValidationError("dropout rate must lie in [0, 1)");
}

void ForecasterConfig::validate() const {
  if (hidden < 1) throw ValidationError("forecaster hidden size must be positive");
  if (epochs < 0) throw ValidationError("forecaster epochs must be non-negative");
  if (!(learning_rate >= 0.0)) throw ValidationError("forecaster learning rate must be non-negative");
  if (batch_size < 1) throw ValidationError("forecaster batch size must be positive");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ValidationError("forecaster dropout rate must lie in [0, 1)");
  if (loss_samples < 1) throw ValidationError("forecaster loss samples must be positive");
  if (train_alphas.empty()) throw ValidationError("forecaster needs at least one training observation fraction");
  if (max_segments < 1) throw ValidationError("forecaster max_segments must be positive");
  if (!(weight_decay >= 0.0)) throw ValidationError("forecaster weight decay must be non-negative");
  if (patience < 0) throw ValidationError("forecaster patience must be non-negative");
}

nlohmann::json to_json(const ForecasterConfig& c) {
  return {{"kind", to_string(c.kind)},
          {"hidden", c.hidden},
          {"epochs", c.epochs},
          {"learning_rate", c.learning_rate},
          {"batch_size", c.batch_size},
          {"dropout_rate", c.dropout_rate},
          {"loss_samples", c.loss_samples},
          {"duration_weight", c.duration_weight},
          {"grad_clip", c.grad_clip},
          {"weight_decay", c.weight_decay},
          {"train_alphas", c.train_alphas},
          {"max_segments", c.max_segments},
          {"patience", c.patience},
          {"context_input", c.context_input == ContextInput::features ? "features" : "labels"}};
}

ForecasterConfig forecaster_config_from_json(const nlohmann::json& j) {
  ForecasterConfig c;
  c.kind = parse_uncertainty_kind(j.at("kind").get<std::string>());
  c.hidden = j.at("hidden").get<int>();
  c.epochs = j.at("epochs").get<int>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.batch_size = j.at("batch_size").get<int>();
  c.dropout_rate = j.at("dropout_rate").get<double>();
  c.loss_samples = j.at("loss_samples").get<int>();
  c.duration_weight = j.at("duration_weight").get<double>();
  c.grad_clip = j.at("grad_clip").get<double>();
  c.weight_decay = j.value("weight_decay", 0.0);
  c.train_alphas = j.at("train_alphas").get<std::vector<double>>();
  c.max_segments = j.at("max_segments").get<int>();
  c.patience = j.value("patience", 0);
  c.context_input = parse_context_input(j.value("context_input", std::string("features")));
  return c;
}

namespace {

void encode_row(nnet::Tensor2D& out, int row, int classes, int label, int start, int length, int total) {
  auto r = out.row(row);
  std::fill(r.begin(), r.end(), 0.0);
  r[static_cast<std::size_t>(label)] = 1.0;
  const double t = static_cast<double>(total);
  r[static_cast<std::size_t>(classes)] = length / t;
  r[static_cast<std::size_t>(classes + 1)] = start / t;
  r[static_cast<std::size_t>(classes + 2)] = (start + length) / t;
}

nnet::Tensor2D encode_single(int classes, int label, int start, int length, int total) {
  nnet::Tensor2D x(1, classes + 3);
  encode_row(x, 0, classes, label, start, length, total);
  return x;
}

std::vector<double> gaussian_vector(int n, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(static_cast<std::size_t>(n));
  for (auto& x : v) x = normal(rng);
  return v;
}

}  // namespace

ObservedContext make_context(const VideoSequence& video, const ObservationSplit& split, int num_classes,
                             ContextInput input) {
  if (split.observed < 1 || split.observed > video.length()) {
    throw ValidationError("video '" + video.id() + "': observation split does not fit the video");
  }
  const auto& frames = video.frames_fine();
  const auto segments = frames_to_segments(std::span<const int>(frames.data(), static_cast<std::size_t>(split.observed)));
  const bool use_features =
      input == ContextInput::features && video.features() && video.features()->cols() == num_classes;
  ObservedContext ctx;
  ctx.observed_frames = split.observed;
  ctx.total_frames = video.length();
  ctx.inputs = nnet::Tensor2D(static_cast<int>(segments.size()), num_classes + 3);
  int start = 0;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto& s = segments[i];
    if (s.action < 0 || s.action >= num_classes) throw ValidationError("video '" + video.id() + "': label out of range");
    encode_row(ctx.inputs, static_cast<int>(i), num_classes, s.action, start, s.length, video.length());
    if (use_features) {
      auto row = ctx.inputs.row(static_cast<int>(i));
      for (int c = 0; c < num_classes; ++c) {
        double sum = 0.0;
        for (int t = start; t < start + s.length; ++t) sum += (*video.features())(t, c);
        row[static_cast<std::size_t>(c)] = sum / s.length;
      }
    }
    start += s.length;
  }
  return ctx;
}

TrainingSequence make_training_sequence(const VideoSequence& video, const ObservationSplit& split, int num_classes,
                                        ContextInput input) {
  TrainingSequence seq;
  seq.context = make_context(video, split, num_classes, input);
  const auto& frames = video.frames_fine();
  const auto future = frames_to_segments(
      std::span<const int>(frames.data() + split.observed, frames.size() - static_cast<std::size_t>(split.observed)));
  int remaining = video.length() - split.observed;
  for (const auto& s : future) {
    seq.actions.push_back(s.action);
    seq.lengths.push_back(s.length);
    seq.fractions.push_back(static_cast<double>(s.length) / remaining);
    remaining -= s.length;
  }
  return seq;
}

Forecaster::Forecaster(int num_classes, int hidden, std::uint64_t init_seed) : classes_(num_classes), hidden_(hidden) {
  if (num_classes < 2 || hidden < 1) throw ValidationError("forecaster needs >= 2 classes and a positive hidden size");
  cell_ = nnet::GruCell::create(params_, "gru", input_dim(), hidden);
  mean_head_ = nnet::Dense::create(params_, "head.mean", hidden, num_classes);
  sigma_head_ = nnet::Dense::create(params_, "head.sigma", hidden, num_classes);
  duration_head_ = nnet::Dense::create(params_, "head.duration", hidden, 1);
  Rng rng(init_seed);
  params_.init_glorot(rng);
}

Forecaster::Heads Forecaster::heads(const nnet::Tensor2D& h) const {
  return {mean_head_.forward(params_, h), sigma_head_.forward(params_, h), duration_head_.forward(params_, h)};
}

double Forecaster::sequence_loss(const TrainingSequence& seq, const LossOptions& options, Rng& rng, bool accumulate,
                                 double grad_scale) {
  const int n_obs = seq.context.inputs.rows();
  const int future = static_cast<int>(seq.actions.size());
  if (n_obs < 1 || future < 1) throw ValidationError("training sequence needs observed and future segments");
  if (seq.context.inputs.cols() != input_dim()) throw ShapeError("training sequence input width mismatch");
  const int steps = n_obs + future - 1;
  const int total = seq.context.total_frames;

  std::vector<nnet::GruCache> caches(static_cast<std::size_t>(steps));
  std::vector<nnet::Tensor2D> hs(static_cast<std::size_t>(steps));
  nnet::Tensor2D h(1, hidden_);
  int start = seq.context.observed_frames;
  for (int s = 0; s < steps; ++s) {
    nnet::Tensor2D x;
    if (s < n_obs) {
      x = nnet::Tensor2D(1, input_dim(), std::vector<double>(seq.context.inputs.row(s).begin(), seq.context.inputs.row(s).end()));
    } else {
      const int k = s - n_obs;
      x = encode_single(classes_, seq.actions[static_cast<std::size_t>(k)], start, seq.lengths[static_cast<std::size_t>(k)], total);
      start += seq.lengths[static_cast<std::size_t>(k)];
    }
    h = nnet::gru_step(params_, cell_, h, x, accumulate ? &caches[static_cast<std::size_t>(s)] : nullptr);
    hs[static_cast<std::size_t>(s)] = h;
  }

  const bool bayes = options.kind == UncertaintyKind::bayesian;
  const bool dropout = options.kind == UncertaintyKind::mc_dropout && options.dropout_rate > 0.0;
  std::vector<nnet::Tensor2D> dh_out(static_cast<std::size_t>(steps));
  double total_loss = 0.0;
  for (int k = 0; k < future; ++k) {
    const int s = n_obs - 1 + k;
    nnet::Tensor2D mask;
    nnet::Tensor2D hd = hs[static_cast<std::size_t>(s)];
    if (dropout) {
      mask = nnet::dropout_mask(1, hidden_, options.dropout_rate, rng);
      hd = nnet::hadamard(hd, mask);
    }
    const auto out = heads(hd);
    const int target = seq.actions[static_cast<std::size_t>(k)];
    std::vector<double> dmu(static_cast<std::size_t>(classes_), 0.0);
    std::vector<double> dsigma(static_cast<std::size_t>(classes_), 0.0);
    double action_loss = 0.0;
    if (bayes) {
      std::vector<double> sigma(static_cast<std::size_t>(classes_), 0.0);
      if (!options.force_zero_variance) {
        for (int c = 0; c < classes_; ++c) sigma[static_cast<std::size_t>(c)] = nnet::softplus(out.sigma_raw(0, c));
      }
      // -log of the Monte Carlo predictive probability of the target.
      std::vector<std::vector<double>> eps(static_cast<std::size_t>(options.samples));
      std::vector<std::vector<double>> probs(static_cast<std::size_t>(options.samples));
      std::vector<double> log_p(static_cast<std::size_t>(options.samples));
      std::vector<double> z(static_cast<std::size_t>(classes_));
      double max_log = -std::numeric_limits<double>::infinity();
      for (std::size_t smp = 0; smp < probs.size(); ++smp) {
        eps[smp] = gaussian_vector(classes_, rng);
        for (std::size_t c = 0; c < z.size(); ++c) z[c] = out.mean(0, static_cast<int>(c)) + sigma[c] * eps[smp][c];
        const auto ce = nnet::softmax_cross_entropy(z, target);
        probs[smp] = nnet::softmax(z);
        log_p[smp] = -ce.loss;
        max_log = std::max(max_log, log_p[smp]);
      }
      double sum = 0.0;
      for (double lp : log_p) sum += std::exp(lp - max_log);
      const double log_mean = max_log + std::log(sum / options.samples);
      if (log_mean <= std::log(nnet::kProbabilityFloor)) {
        action_loss = -std::log(nnet::kProbabilityFloor);
      } else {
        action_loss = -log_mean;
        for (std::size_t smp = 0; smp < probs.size(); ++smp) {
          // Sample weight p_s[y] / (S * mean_p).
          const double w = std::exp(log_p[smp] - log_mean) / options.samples;
          for (std::size_t c = 0; c < z.size(); ++c) {
            const double g = w * (probs[smp][c] - (static_cast<int>(c) == target ? 1.0 : 0.0));
            dmu[c] += g;
            dsigma[c] += g * eps[smp][c];
          }
        }
      }
    } else {
      const auto ce = nnet::softmax_cross_entropy(out.mean.row(0), target);
      action_loss = ce.loss;
      dmu = ce.grad;
    }
    const double d = out.duration_logit(0, 0);
    const double diff = nnet::log_sigmoid(d) - std::log(seq.fractions[static_cast<std::size_t>(k)]);
    const double duration_loss = options.duration_weight * diff * diff;
    total_loss += (action_loss + duration_loss) / future;

    if (!accumulate) continue;
    const double scale = grad_scale / future;
    nnet::Tensor2D g_mu(1, classes_);
    for (int c = 0; c < classes_; ++c) g_mu(0, c) = dmu[static_cast<std::size_t>(c)] * scale;
    nnet::Tensor2D dhd = mean_head_.backward(params_, hd, g_mu);
    if (bayes && !options.force_zero_variance) {
      nnet::Tensor2D g_sigma(1, classes_);
      for (int c = 0; c < classes_; ++c) {
        g_sigma(0, c) = dsigma[static_cast<std::size_t>(c)] * nnet::sigmoid(out.sigma_raw(0, c)) * scale;
      }
      dhd += sigma_head_.backward(params_, hd, g_sigma);
    }
    nnet::Tensor2D g_d(1, 1);
    g_d(0, 0) = options.duration_weight * 2.0 * diff * (1.0 - nnet::sigmoid(d)) * scale;
    dhd += duration_head_.backward(params_, hd, g_d);
    if (dropout) dhd = nnet::hadamard(dhd, mask);
    dh_out[static_cast<std::size_t>(s)] = std::move(dhd);
  }

  if (accumulate) {
    nnet::Tensor2D dh(1, hidden_);
    for (int s = steps - 1; s >= 0; --s) {
      if (!dh_out[static_cast<std::size_t>(s)].empty()) dh += dh_out[static_cast<std::size_t>(s)];
      dh = nnet::gru_step_backward(params_, cell_, caches[static_cast<std::size_t>(s)], dh);
    }
  }
  return total_loss;
}

std::vector<SegmentDistribution> Forecaster::rollout(const ObservedContext& context, int horizon,
                                                     const RolloutOptions& options, Rng& rng) const {
  if (horizon < 1) throw ValidationError("rollout horizon must be at least 1");
  if (context.inputs.rows() < 1) throw ValidationError("rollout needs a non-empty observed context");
  if (context.inputs.cols() != input_dim()) throw ShapeError("rollout context width mismatch");
  const int total = context.total_frames;
  int remaining = total - context.observed_frames;
  if (remaining < horizon) throw ValidationError("rollout horizon exceeds the unobserved part of the video");

  nnet::Tensor2D h(1, hidden_);
  for (int s = 0; s < context.inputs.rows(); ++s) {
    const nnet::Tensor2D x(1, input_dim(), std::vector<double>(context.inputs.row(s).begin(), context.inputs.row(s).end()));
    h = nnet::gru_step(params_, cell_, h, x);
  }

  std::vector<SegmentDistribution> out;
  int pos = context.observed_frames;
  int covered = 0;
  for (int k = 0; k < options.max_segments; ++k) {
    nnet::Tensor2D hd = h;
    if (options.dropout && options.dropout_rate > 0.0) {
      hd = nnet::hadamard(hd, nnet::dropout_mask(1, hidden_, options.dropout_rate, rng));
    }
    const auto o = heads(hd);
    std::vector<double> logits(o.mean.values());
    if (options.sample_logits) {
      const auto eps = gaussian_vector(classes_, rng);
      for (int c = 0; c < classes_; ++c) {
        logits[static_cast<std::size_t>(c)] += nnet::softplus(o.sigma_raw(0, c)) * eps[static_cast<std::size_t>(c)];
      }
    }
    SegmentDistribution seg{nnet::softmax(logits), nnet::sigmoid(o.duration_logit(0, 0))};
    const int len = segment_frames(seg.duration, remaining);
    const int label = (k == 0 && options.first_feedback_override) ? *options.first_feedback_override
                                                                  : argmax(seg.probabilities);
    out.push_back(std::move(seg));
    covered += len;
    if (covered >= horizon) break;
    const auto x = encode_single(classes_, label, pos, len, total);
    pos += len;
    remaining -= len;
    h = nnet::gru_step(params_, cell_, h, x);
  }
  return out;
}

namespace {

std::vector<TrainingSequence> cut_sequences(const Corpus& corpus, const ForecasterConfig& config, int classes) {
  std::vector<TrainingSequence> sequences;
  for (const auto& video : corpus) {
    for (double alpha : config.train_alphas) {
      ObservationSplit split;
      try {
        split = split_observation(video, alpha, 1.0);
      } catch (const ValidationError&) {
        continue;
      }
      sequences.push_back(make_training_sequence(video, split, classes, config.context_input));
    }
  }
  return sequences;
}

Forecaster fit(const Corpus& train, const Corpus* validation, const ForecasterConfig& config, std::uint64_t seed,
               const Taxonomy& taxonomy) {
  config.validate();
  if (train.empty()) throw ValidationError("train_forecaster: empty training corpus");
  const int classes = taxonomy.fine_count();
  const auto sequences = cut_sequences(train, config, classes);
  if (sequences.empty()) throw ValidationError("train_forecaster: no video is long enough to cut a training sequence");
  std::vector<TrainingSequence> held_out;
  if (validation) {
    held_out = cut_sequences(*validation, config, classes);
    if (held_out.empty()) throw ValidationError("train_forecaster: empty validation corpus");
  }

  Forecaster model(classes, config.hidden, derive_seed(seed, "init"));
  nnet::AdamOptions adam_options;
  adam_options.learning_rate = config.learning_rate;
  adam_options.weight_decay = config.weight_decay;
  nnet::Adam adam(adam_options);
  Rng rng(derive_seed(seed, "train"));
  LossOptions options;
  options.kind = config.kind;
  options.samples = config.loss_samples;
  options.dropout_rate = config.kind == UncertaintyKind::mc_dropout ? config.dropout_rate : 0.0;
  options.duration_weight = config.duration_weight;

  double best = std::numeric_limits<double>::infinity();
  std::vector<nnet::Tensor2D> best_params;
  int stale = 0;
  std::vector<std::size_t> order(sequences.size());
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    int batch_index = 0;
    for (std::size_t b = 0; b < order.size(); b += static_cast<std::size_t>(config.batch_size), ++batch_index) {
      const std::size_t e = std::min(order.size(), b + static_cast<std::size_t>(config.batch_size));
      const double scale = 1.0 / static_cast<double>(e - b);
      model.params().zero_grad();
      double loss = 0.0;
      for (std::size_t i = b; i < e; ++i) loss += model.sequence_loss(sequences[order[i]], options, rng, true, scale);
      if (!std::isfinite(loss)) {
        throw NumericError("forecaster loss is not finite at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(batch_index));
      }
      if (config.grad_clip > 0.0) nnet::clip_grad_norm(model.params(), config.grad_clip);
      adam.step(model.params());
    }
    if (!validation) continue;
    Rng eval_rng(derive_seed(seed, "validation"));
    double loss = 0.0;
    for (const auto& seq : held_out) loss += model.sequence_loss(seq, options, eval_rng, false);
    loss /= static_cast<double>(held_out.size());
    if (!std::isfinite(loss)) throw NumericError("forecaster validation loss is not finite at epoch " + std::to_string(epoch));
    if (loss < best) {
      best = loss;
      best_params = model.params().snapshot();
      stale = 0;
    } else if (config.patience > 0 && ++stale >= config.patience) {
      break;
    }
  }
  if (validation && !best_params.empty()) model.params().restore(best_params);
  return model;
}

}  // namespace

Forecaster train_forecaster(const Corpus& train, const ForecasterConfig& config, std::uint64_t seed,
                            const Taxonomy& taxonomy) {
  return fit(train, nullptr, config, seed, taxonomy);
}

Forecaster train_forecaster(const Corpus& train, const Corpus& validation, const ForecasterConfig& config,
                            std::uint64_t seed, const Taxonomy& taxonomy) {
  return fit(train, &validation, config, seed, taxonomy);
}

ForecastDistribution predict_future(std::span<const Forecaster* const> models, const ObservedContext& context,
                                    int horizon, const UncertaintyMode& mode, std::uint64_t seed,
                                    const Taxonomy& taxonomy, int max_segments) {
  mode.validate();
  if (horizon < 1) throw ValidationError("predict_future: horizon must be at least 1");
  if (models.empty()) throw ValidationError("predict_future: no models given");
  const int remaining = context.total_frames - context.observed_frames;
  std::vector<ProbabilityTrack> tracks;
  Rng rng(seed);
  RolloutOptions options;
  options.max_segments = max_segments;
  switch (mode.kind) {
    case UncertaintyKind::ensemble:
      if (static_cast<int>(models.size()) != mode.count) {
        throw ValidationError("ensemble mode expects " + std::to_string(mode.count) + " members, got " +
                              std::to_string(models.size()));
      }
      for (const auto* m : models) {
        tracks.push_back(expand_segments_to_frames(m->rollout(context, horizon, options, rng), horizon, remaining));
      }
      break;
    case UncertaintyKind::mc_dropout:
      options.dropout = true;
      options.dropout_rate = mode.dropout_rate;
      for (int s = 0; s < mode.count; ++s) {
        tracks.push_back(expand_segments_to_frames(models[0]->rollout(context, horizon, options, rng), horizon, remaining));
      }
      break;
    case UncertaintyKind::bayesian:
      options.sample_logits = true;
      for (int s = 0; s < mode.count; ++s) {
        tracks.push_back(expand_segments_to_frames(models[0]->rollout(context, horizon, options, rng), horizon, remaining));
      }
      break;
  }
  return aggregate_tracks(tracks, taxonomy);
}

void save_forecaster(const std::filesystem::path& stem, const Forecaster& model, const ForecasterInfo& info) {
  auto ckpt = stem;
  ckpt += ".ckpt";
  auto sidecar = stem;
  sidecar += ".json";
  nnet::save_params(ckpt, model.params());
  char fp[17];
  std::snprintf(fp, sizeof fp, "%016llx", static_cast<unsigned long long>(info.taxonomy_fingerprint));
  nlohmann::ordered_json j;
  j["format"] = "islands-forecaster";
  j["version"] = 1;
  j["classes"] = model.num_classes();
  j["input_dim"] = model.input_dim();
  j["hidden"] = model.hidden();
  j["mode"] = to_string(info.kind);
  j["seed"] = info.seed;
  j["taxonomy_fingerprint"] = fp;
  j["config"] = to_json(info.config);
  detail::write_text_file(sidecar, j.dump(2) + "\n");
}

Forecaster load_forecaster(const std::filesystem::path& stem, ForecasterInfo* info) {
  auto ckpt = stem;
  ckpt += ".ckpt";
  auto sidecar = stem;
  sidecar += ".json";
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(detail::read_text_file(sidecar));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(sidecar.string() + ": " + e.what());
  }
  if (j.value("format", "") != "islands-forecaster") throw ParseError(sidecar.string() + ": not a forecaster sidecar");
  Forecaster model(j.at("classes").get<int>(), j.at("hidden").get<int>(), 0);
  nnet::load_params(ckpt, model.params());
  if (info) {
    info->kind = parse_uncertainty_kind(j.at("mode").get<std::string>());
    info->seed = j.at("seed").get<std::uint64_t>();
    info->taxonomy_fingerprint = std::stoull(j.at("taxonomy_fingerprint").get<std::string>(), nullptr, 16);
    info->config = forecaster_config_from_json(j.at("config"));
  }
  return model;
}

}  // namespace islands
