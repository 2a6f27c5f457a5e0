/*
 * Copyright 2026 The Islands Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "io_util.hpp"
#include "islands/error.hpp"
#include "islands/nnet/checkpoint.hpp"
#include "islands/nnet/optim.hpp"
#include "islands/random.hpp"
#include "islands/selector.hpp"

namespace islands {

void SelectorTrainConfig::validate() const {
  arch.validate();
  if (!(loss.gamma >= 0.0) || !std::isfinite(loss.gamma)) throw ValidationError("selector gamma must be >= 0");
  if (epochs < 1) throw ValidationError("selector epochs must be positive");
  if (!(learning_rate > 0.0)) throw ValidationError("selector learning rate must be positive");
  if (batch_size < 1) throw ValidationError("selector batch size must be positive");
  if (patience < 1) throw ValidationError("selector patience must be positive");
}

namespace {

struct Prepared {
  std::vector<int> fine;
  std::vector<int> coarse;
};

std::vector<Prepared> prepare(const SelectorDataset& data, const Taxonomy& taxonomy) {
  std::vector<Prepared> out;
  out.reserve(data.size());
  for (const auto& s : data) {
    s.validate(taxonomy);
    out.push_back({fine_argmax_from_features(s.features, taxonomy), coarse_argmax_from_features(s.features, taxonomy)});
  }
  return out;
}

WeightedTally tally_model(const SelectorModel& model, const SelectorDataset& data, const std::vector<Prepared>& prep,
                          const Taxonomy& taxonomy) {
  WeightedTally total;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto track = model.select(data[i].features);
    total += tally_selection(track.selection, prep[i].fine, prep[i].coarse, data[i].truth_fine, taxonomy);
  }
  return total;
}

}  // namespace

std::vector<SelectorFit> train_selector_multi(const SelectorDataset& train, const SelectorDataset& validation,
                                              const SelectorTrainConfig& config, std::span<const double> betas,
                                              std::uint64_t seed, const Taxonomy& taxonomy) {
  config.validate();
  if (train.empty()) throw ValidationError("train_selector: empty training set");
  if (validation.empty()) throw ValidationError("train_selector: empty validation set");
  if (betas.empty()) throw ValidationError("train_selector: no early-stopping beta");
  for (double b : betas) {
    if (!(b > 0.0) || !std::isfinite(b)) throw ValidationError("train_selector: beta must be positive and finite");
  }
  prepare(train, taxonomy);
  const auto val_prep = prepare(validation, taxonomy);

  SelectorModel model(config.arch, train.front().features.cols(), derive_seed(seed, "init"));
  nnet::Adam adam({config.learning_rate});
  Rng rng(derive_seed(seed, "shuffle"));

  struct Track {
    double best = -1.0;
    int best_epoch = -1;
    int stale = 0;
    bool active = true;
    std::vector<nnet::Tensor2D> snapshot;
  };
  std::vector<Track> tracks(betas.size());

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  const auto batch = static_cast<std::size_t>(config.batch_size);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    int batch_index = 0;
    for (std::size_t b = 0; b < order.size(); b += batch, ++batch_index) {
      const std::size_t e = std::min(order.size(), b + batch);
      std::vector<SelectorModel::Cache> caches(e - b);
      std::vector<nnet::Tensor2D> logits;
      std::vector<std::vector<int>> labels;
      for (std::size_t i = b; i < e; ++i) {
        logits.push_back(model.logits(train[order[i]].features, &caches[i - b]));
        labels.push_back(train[order[i]].labels);
      }
      std::vector<nnet::Tensor2D> grads;
      const auto loss = selector_loss_from_logits(logits, labels, config.loss, &grads);
      if (!std::isfinite(loss.total)) {
        throw NumericError("selector loss is not finite at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(batch_index));
      }
      model.params().zero_grad();
      for (std::size_t i = 0; i < caches.size(); ++i) model.backward(caches[i], grads[i]);
      if (config.grad_clip > 0.0) nnet::clip_grad_norm(model.params(), config.grad_clip);
      adam.step(model.params());
    }

    const auto tally = tally_model(model, validation, val_prep, taxonomy);
    bool any_active = false;
    for (std::size_t k = 0; k < tracks.size(); ++k) {
      auto& t = tracks[k];
      if (!t.active) continue;
      const double score = tally.weighted(betas[k]);
      if (score > t.best) {
        t.best = score;
        t.best_epoch = epoch;
        t.stale = 0;
        t.snapshot = model.params().snapshot();
      } else if (++t.stale >= config.patience) {
        t.active = false;
      }
      any_active = any_active || t.active;
    }
    if (!any_active) break;
  }

  std::vector<SelectorFit> fits;
  for (std::size_t k = 0; k < tracks.size(); ++k) {
    SelectorFit fit{betas[k], tracks[k].best_epoch, tracks[k].best, model};
    fit.model.params().restore(tracks[k].snapshot);
    fits.push_back(std::move(fit));
  }
  return fits;
}

SelectorModel train_selector(const SelectorDataset& train, const SelectorDataset& validation,
                             const SelectorTrainConfig& config, double beta, std::uint64_t seed,
                             const Taxonomy& taxonomy) {
  const double betas[] = {beta};
  return std::move(train_selector_multi(train, validation, config, betas, seed, taxonomy).front().model);
}

WeightedTally evaluate_selector(const SelectorModel& model, const SelectorDataset& data, const Taxonomy& taxonomy) {
  return tally_model(model, data, prepare(data, taxonomy), taxonomy);
}

WeightedTally evaluate_constant(const SelectorDataset& data, Granularity level, const Taxonomy& taxonomy) {
  WeightedTally total;
  const auto prep = prepare(data, taxonomy);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const std::vector<int> selection(data[i].labels.size(), static_cast<int>(level));
    total += tally_selection(selection, prep[i].fine, prep[i].coarse, data[i].truth_fine, taxonomy);
  }
  return total;
}

WeightedTally evaluate_oracle(const SelectorDataset& data, const Taxonomy& taxonomy) {
  WeightedTally total;
  const auto prep = prepare(data, taxonomy);
  for (std::size_t i = 0; i < data.size(); ++i) {
    total += tally_selection(data[i].labels, prep[i].fine, prep[i].coarse, data[i].truth_fine, taxonomy);
  }
  return total;
}

void save_selector(const std::filesystem::path& stem, const SelectorModel& model, const nlohmann::json& extra) {
  auto ckpt = stem;
  ckpt += ".ckpt";
  auto sidecar = stem;
  sidecar += ".json";
  nnet::save_params(ckpt, model.params());
  nlohmann::ordered_json j;
  j["format"] = "islands-selector";
  j["version"] = 1;
  j["input_dim"] = model.input_dim();
  j["arch"] = to_json(model.arch());
  if (!extra.is_null()) j["info"] = extra;
  detail::write_text_file(sidecar, j.dump(2) + "\n");
}

SelectorModel load_selector(const std::filesystem::path& stem) {
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
  if (j.value("format", "") != "islands-selector") throw ParseError(sidecar.string() + ": not a selector sidecar");
  SelectorModel model(selector_arch_from_json(j.at("arch")), j.at("input_dim").get<int>(), 0);
  nnet::load_params(ckpt, model.params());
  return model;
}

}  // namespace islands
