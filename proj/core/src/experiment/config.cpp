/*
 * Copyright 2026 The Islands Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#include "islands/experiment/config.hpp"

#include <cmath>
#include <set>

#include "../io_util.hpp"
#include "islands/error.hpp"

namespace islands::experiment {

namespace {

using json = nlohmann::json;

// A JSON object whose keys are consumed one by one; leftovers are errors.
class Section {
 public:
  Section(const json* j, std::string prefix) : j_(j), prefix_(std::move(prefix)) {
    if (j_ && !j_->is_object()) throw ConfigError(prefix_.empty() ? "<root>" : prefix_, "expected an object");
  }

  std::string key(const std::string& k) const { return prefix_.empty() ? k : prefix_ + "." + k; }

  const json* find(const std::string& k) {
    seen_.insert(k);
    if (!j_) return nullptr;
    auto it = j_->find(k);
    return it == j_->end() ? nullptr : &*it;
  }

  template <class T>
  T get(const std::string& k, T fallback) {
    const json* v = find(k);
    if (!v) return fallback;
    try {
      return v->get<T>();
    } catch (const json::exception&) {
      throw ConfigError(key(k), "has the wrong type");
    }
  }

  template <class T>
  T require(const std::string& k) {
    const json* v = find(k);
    if (!v) throw ConfigError(key(k), "is required");
    try {
      return v->get<T>();
    } catch (const json::exception&) {
      throw ConfigError(key(k), "has the wrong type");
    }
  }

  Section child(const std::string& k) { return Section(find(k), key(k)); }

  void finish() const {
    if (!j_) return;
    for (auto it = j_->begin(); it != j_->end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError(key(it.key()), "unknown key");
    }
  }

 private:
  const json* j_;
  std::string prefix_;
  std::set<std::string> seen_;
};

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  if (p.empty()) return {};
  std::filesystem::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

template <class Fn>
auto wrap(const std::string& key, Fn&& fn) {
  try {
    return fn();
  } catch (const ValidationError& e) {
    throw ConfigError(key, e.what());
  }
}

std::string mode_name(UncertaintyKind k) { return to_string(k); }

}  // namespace

void ExperimentConfig::validate() const {
  if (taxonomy.empty()) throw ConfigError("taxonomy", "is required");
  if (!std::filesystem::is_regular_file(taxonomy)) throw ConfigError("taxonomy", "file not found: " + taxonomy.string());
  if (corpus.source == CorpusSource::grammar) {
    if (corpus.grammar.empty()) throw ConfigError("corpus.grammar", "is required for a grammar corpus");
    if (!std::filesystem::is_regular_file(corpus.grammar)) {
      throw ConfigError("corpus.grammar", "file not found: " + corpus.grammar.string());
    }
    if (corpus.videos < 1) throw ConfigError("corpus.videos", "must be positive");
  } else {
    if (corpus.annotations.empty()) throw ConfigError("corpus.annotations", "is required for an annotation corpus");
    if (!std::filesystem::is_directory(corpus.annotations)) {
      throw ConfigError("corpus.annotations", "directory not found: " + corpus.annotations.string());
    }
  }
  if (splits.folds < 2) throw ConfigError("splits.folds", "must be at least 2");
  if (!(splits.validation_fraction > 0.0 && splits.validation_fraction < 1.0)) {
    throw ConfigError("splits.validation_fraction", "must lie in (0, 1)");
  }
  if (!(protocol.alpha > 0.0 && protocol.alpha < 1.0)) throw ConfigError("protocol.alpha", "must lie in (0, 1)");
  if (!(protocol.horizon_fraction > 0.0 && protocol.horizon_fraction <= 1.0)) {
    throw ConfigError("protocol.horizon_fraction", "must lie in (0, 1]");
  }
  if (forecaster.modes.empty()) throw ConfigError("forecaster.modes", "must not be empty");
  if (forecaster.ensemble_members < 1) throw ConfigError("forecaster.ensemble_members", "must be positive");
  if (forecaster.samples < 1) throw ConfigError("forecaster.samples", "must be positive");
  wrap("forecaster", [&] {
    forecaster.model.validate();
    return 0;
  });
  if (selector.variants.empty()) throw ConfigError("selector.variants", "must not be empty");
  if (selector.gammas.empty()) throw ConfigError("selector.gammas", "must not be empty");
  for (double g : selector.gammas) {
    if (!(g >= 0.0) || !std::isfinite(g)) throw ConfigError("selector.gammas", "entries must be >= 0");
  }
  if (selector.seeds < 1) throw ConfigError("selector.seeds", "must be positive");
  if (!(selector.early_stop_fraction > 0.0 && selector.early_stop_fraction < 1.0)) {
    throw ConfigError("selector.early_stop_fraction", "must lie in (0, 1)");
  }
  wrap("selector", [&] {
    selector.train.validate();
    return 0;
  });
  bool has_mode = false;
  for (auto m : forecaster.modes) has_mode = has_mode || m == selector.forecast_mode;
  if (!has_mode) throw ConfigError("selector.forecast_mode", "is not among forecaster.modes");
  if (betas.empty()) throw ConfigError("betas", "must not be empty");
  for (double b : betas) {
    if (!(b > 0.0) || !std::isfinite(b)) throw ConfigError("betas", "entries must be positive");
  }
  bool has_beta = false;
  for (double b : betas) has_beta = has_beta || b == timeline.beta;
  if (!has_beta) throw ConfigError("timeline.beta", "is not among betas");
  if (timeline.seed_index < 0 || timeline.seed_index >= selector.seeds) {
    throw ConfigError("timeline.seed_index", "must index a selector seed");
  }
  bool has_variant = false;
  for (auto v : selector.variants) has_variant = has_variant || v == timeline.variant;
  if (!has_variant) throw ConfigError("timeline.variant", "is not among selector.variants");
  if (output.empty()) throw ConfigError("output", "must not be empty");
}

nlohmann::ordered_json ExperimentConfig::to_json() const {
  nlohmann::ordered_json j;
  j["seed"] = seed;
  j["taxonomy"] = taxonomy.string();
  auto& c = j["corpus"];
  c["source"] = corpus.source == CorpusSource::grammar ? "grammar" : "annotations";
  c["grammar"] = corpus.grammar.string();
  c["videos"] = corpus.videos;
  c["annotations"] = corpus.annotations.string();
  j["splits"] = {{"folds", splits.folds}, {"validation_fraction", splits.validation_fraction}};
  j["protocol"] = {{"alpha", protocol.alpha}, {"horizon_fraction", protocol.horizon_fraction}};
  auto& f = j["forecaster"];
  std::vector<std::string> modes;
  for (auto m : forecaster.modes) modes.push_back(mode_name(m));
  f["modes"] = modes;
  f["ensemble_members"] = forecaster.ensemble_members;
  f["samples"] = forecaster.samples;
  const auto& m = forecaster.model;
  f["hidden"] = m.hidden;
  f["epochs"] = m.epochs;
  f["learning_rate"] = m.learning_rate;
  f["batch_size"] = m.batch_size;
  f["dropout_rate"] = m.dropout_rate;
  f["loss_samples"] = m.loss_samples;
  f["duration_weight"] = m.duration_weight;
  f["grad_clip"] = m.grad_clip;
  f["weight_decay"] = m.weight_decay;
  f["patience"] = m.patience;
  f["train_alphas"] = m.train_alphas;
  f["max_segments"] = m.max_segments;
  f["context_input"] = m.context_input == ContextInput::features ? "features" : "labels";
  auto& s = j["selector"];
  s["forecast_mode"] = mode_name(selector.forecast_mode);
  std::vector<std::string> variants;
  for (auto v : selector.variants) variants.push_back(to_string(v));
  s["variants"] = variants;
  s["gammas"] = selector.gammas;
  s["seeds"] = selector.seeds;
  s["early_stop_fraction"] = selector.early_stop_fraction;
  const auto& t = selector.train;
  s["hidden"] = t.arch.hidden;
  s["channels"] = t.arch.channels;
  s["blocks"] = t.arch.blocks;
  s["kernel"] = t.arch.kernel;
  s["epochs"] = t.epochs;
  s["learning_rate"] = t.learning_rate;
  s["batch_size"] = t.batch_size;
  s["patience"] = t.patience;
  s["grad_clip"] = t.grad_clip;
  s["indicator"] = t.loss.indicator == IndicatorMode::truth ? "truth" : "predicted";
  s["granularity_norm"] = t.loss.norm == GranularityNorm::restricted ? "restricted" : "horizon";
  j["betas"] = betas;
  j["timeline"] = {{"videos", timeline.videos},
                   {"variant", to_string(timeline.variant)},
                   {"beta", timeline.beta},
                   {"seed_index", timeline.seed_index}};
  j["output"] = output.string();
  return j;
}

std::uint64_t ExperimentConfig::hash() const { return detail::fnv1a(to_json().dump()); }

ExperimentConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  ExperimentConfig cfg;
  Section r(&root, "");
  cfg.seed = r.require<std::uint64_t>("seed");
  cfg.taxonomy = resolve(base_dir, r.get<std::string>("taxonomy", ""));

  auto c = r.child("corpus");
  const auto source = c.get<std::string>("source", "grammar");
  if (source == "grammar") {
    cfg.corpus.source = CorpusSource::grammar;
  } else if (source == "annotations") {
    cfg.corpus.source = CorpusSource::annotations;
  } else {
    throw ConfigError("corpus.source", "must be 'grammar' or 'annotations'");
  }
  cfg.corpus.grammar = resolve(base_dir, c.get<std::string>("grammar", ""));
  cfg.corpus.videos = c.get<int>("videos", cfg.corpus.videos);
  cfg.corpus.annotations = resolve(base_dir, c.get<std::string>("annotations", ""));
  c.finish();

  auto sp = r.child("splits");
  cfg.splits.folds = sp.get<int>("folds", cfg.splits.folds);
  cfg.splits.validation_fraction = sp.get<double>("validation_fraction", cfg.splits.validation_fraction);
  sp.finish();

  auto p = r.child("protocol");
  cfg.protocol.alpha = p.get<double>("alpha", cfg.protocol.alpha);
  cfg.protocol.horizon_fraction = p.get<double>("horizon_fraction", cfg.protocol.horizon_fraction);
  p.finish();

  auto f = r.child("forecaster");
  if (f.find("modes")) {
    cfg.forecaster.modes.clear();
    for (const auto& name : f.get<std::vector<std::string>>("modes", {})) {
      cfg.forecaster.modes.push_back(wrap("forecaster.modes", [&] { return parse_uncertainty_kind(name); }));
    }
  }
  cfg.forecaster.ensemble_members = f.get<int>("ensemble_members", cfg.forecaster.ensemble_members);
  cfg.forecaster.samples = f.get<int>("samples", cfg.forecaster.samples);
  auto& m = cfg.forecaster.model;
  m.hidden = f.get<int>("hidden", m.hidden);
  m.epochs = f.get<int>("epochs", m.epochs);
  m.learning_rate = f.get<double>("learning_rate", m.learning_rate);
  m.batch_size = f.get<int>("batch_size", m.batch_size);
  m.dropout_rate = f.get<double>("dropout_rate", m.dropout_rate);
  m.loss_samples = f.get<int>("loss_samples", m.loss_samples);
  m.duration_weight = f.get<double>("duration_weight", m.duration_weight);
  m.grad_clip = f.get<double>("grad_clip", m.grad_clip);
  m.weight_decay = f.get<double>("weight_decay", m.weight_decay);
  m.patience = f.get<int>("patience", m.patience);
  m.train_alphas = f.get<std::vector<double>>("train_alphas", m.train_alphas);
  m.max_segments = f.get<int>("max_segments", m.max_segments);
  m.context_input = wrap("forecaster.context_input",
                         [&] { return parse_context_input(f.get<std::string>("context_input", "features")); });
  f.finish();

  auto s = r.child("selector");
  cfg.selector.forecast_mode =
      wrap("selector.forecast_mode", [&] { return parse_uncertainty_kind(s.get<std::string>("forecast_mode", "bayesian")); });
  if (s.find("variants")) {
    cfg.selector.variants.clear();
    for (const auto& name : s.get<std::vector<std::string>>("variants", {})) {
      cfg.selector.variants.push_back(wrap("selector.variants", [&] { return parse_selector_variant(name); }));
    }
  }
  cfg.selector.gammas = s.get<std::vector<double>>("gammas", cfg.selector.gammas);
  cfg.selector.seeds = s.get<int>("seeds", cfg.selector.seeds);
  cfg.selector.early_stop_fraction = s.get<double>("early_stop_fraction", cfg.selector.early_stop_fraction);
  auto& t = cfg.selector.train;
  t.arch.hidden = s.get<int>("hidden", t.arch.hidden);
  t.arch.channels = s.get<int>("channels", t.arch.channels);
  t.arch.blocks = s.get<int>("blocks", t.arch.blocks);
  t.arch.kernel = s.get<int>("kernel", t.arch.kernel);
  t.epochs = s.get<int>("epochs", t.epochs);
  t.learning_rate = s.get<double>("learning_rate", t.learning_rate);
  t.batch_size = s.get<int>("batch_size", t.batch_size);
  t.patience = s.get<int>("patience", t.patience);
  t.grad_clip = s.get<double>("grad_clip", t.grad_clip);
  const auto indicator = s.get<std::string>("indicator", "truth");
  if (indicator == "truth") {
    t.loss.indicator = IndicatorMode::truth;
  } else if (indicator == "predicted") {
    t.loss.indicator = IndicatorMode::predicted;
  } else {
    throw ConfigError("selector.indicator", "must be 'truth' or 'predicted'");
  }
  const auto norm = s.get<std::string>("granularity_norm", "restricted");
  if (norm == "restricted") {
    t.loss.norm = GranularityNorm::restricted;
  } else if (norm == "horizon") {
    t.loss.norm = GranularityNorm::horizon;
  } else {
    throw ConfigError("selector.granularity_norm", "must be 'restricted' or 'horizon'");
  }
  s.finish();

  cfg.betas = r.get<std::vector<double>>("betas", cfg.betas);

  auto tl = r.child("timeline");
  cfg.timeline.videos = tl.get<std::vector<std::string>>("videos", {});
  cfg.timeline.variant = wrap("timeline.variant", [&] { return parse_selector_variant(tl.get<std::string>("variant", "tcn")); });
  cfg.timeline.beta = tl.get<double>("beta", cfg.timeline.beta);
  cfg.timeline.seed_index = tl.get<int>("seed_index", cfg.timeline.seed_index);
  tl.finish();

  cfg.output = resolve(base_dir, r.get<std::string>("output", "out"));
  r.finish();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  ExperimentConfig cfg = parse_config(detail::read_text_file(path), path.parent_path());
  cfg.source_path = path;
  return cfg;
}

nlohmann::ordered_json default_config_json() {
  ExperimentConfig cfg;
  auto j = cfg.to_json();
  j["seed"] = "<required>";
  j["taxonomy"] = "<required>";
  j["corpus"]["grammar"] = "<required when source is grammar>";
  j["corpus"]["annotations"] = "<required when source is annotations>";
  return j;
}

}  // namespace islands::experiment
