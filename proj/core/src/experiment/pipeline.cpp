/*
 * Copyright 2026 The Islands Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#include "islands/experiment/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <exception>
#include <functional>
#include <limits>
#include <numeric>
#include <set>
#include <thread>

#include <nlohmann/json.hpp>

#include "../io_util.hpp"
#include "islands/annotations.hpp"
#include "islands/experiment/reports.hpp"
#include "islands/experiment/timeline.hpp"
#include "islands/forecaster.hpp"
#include "islands/grammar.hpp"
#include "islands/metrics.hpp"
#include "islands/random.hpp"
#include "islands/selector.hpp"

#ifndef ISLANDS_VERSION
#define ISLANDS_VERSION "unknown"
#endif

namespace islands::experiment {

namespace fs = std::filesystem;
using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace {

// ---- plumbing ----------------------------------------------------------------

/// Runs fn(0..n-1) on up to `jobs` threads; the lowest-index failure wins.
void parallel_for(int n, int jobs, const std::function<void(int)>& fn) {
  if (jobs <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> threads;
  for (int w = 0; w < std::min(jobs, n); ++w) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

template <class Fn>
void run_stage(const std::string& stage, Fn&& fn) {
  try {
    fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, e.what());
  }
}

std::string hex64(std::uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string utc_now() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_json(const fs::path& path, const ojson& j) { detail::write_text_file(path, j.dump(2) + "\n"); }

json read_json(const fs::path& path) {
  try {
    return json::parse(detail::read_text_file(path));
  } catch (const json::exception& e) {
    throw ParseError("'" + path.string() + "': " + e.what());
  }
}

void require_file(const fs::path& path, const std::string& hint) {
  if (!fs::exists(path)) throw Error("missing '" + path.string() + "'; " + hint);
}

/// Adds a stage entry to out/manifest.json. Starts over when the config changed.
void record_stage(const ExperimentConfig& config, const std::string& stage, double seconds,
                  const std::vector<fs::path>& artifacts) {
  const fs::path path = config.output / "manifest.json";
  const std::string hash = hex64(config.hash());
  ojson manifest;
  if (fs::exists(path)) {
    try {
      manifest = ojson::parse(detail::read_text_file(path));
      if (!manifest.is_object() || manifest.value("config_hash", std::string{}) != hash) manifest = ojson();
    } catch (const std::exception&) {
      manifest = ojson();
    }
  }
  if (manifest.is_null()) {
    manifest["config_hash"] = hash;
    manifest["seed"] = config.seed;
    manifest["version"] = ISLANDS_VERSION;
    manifest["config"] = config.to_json();
    manifest["stages"] = ojson::object();
  }
  ojson list = ojson::array();
  for (const auto& a : artifacts) {
    if (!fs::exists(a)) throw Error("artifact '" + a.string() + "' was not written");
    list.push_back(fs::relative(a, config.output).generic_string());
  }
  manifest["stages"][stage] = {{"artifacts", list}, {"wall_clock_seconds", seconds}, {"finished_at", utc_now()}};
  write_json(path, manifest);
}

class StageTimer {
 public:
  StageTimer() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

// ---- data --------------------------------------------------------------------

fs::path data_dir(const ExperimentConfig& c) { return c.output / "data"; }

json tensor_json(const nnet::Tensor2D& t) {
  json rows = json::array();
  for (int r = 0; r < t.rows(); ++r) rows.push_back(std::vector<double>(t.row(r).begin(), t.row(r).end()));
  return rows;
}

nnet::Tensor2D tensor_from_json(const json& j) {
  const int rows = static_cast<int>(j.size());
  const int cols = rows ? static_cast<int>(j[0].size()) : 0;
  nnet::Tensor2D t(rows, cols);
  for (int r = 0; r < rows; ++r) {
    if (static_cast<int>(j[r].size()) != cols) throw ParseError("ragged feature matrix");
    for (int c = 0; c < cols; ++c) t(r, c) = j[r][c].get<double>();
  }
  return t;
}

std::vector<const VideoSequence*> subset(const Corpus& corpus, const std::vector<int>& idx) {
  std::vector<const VideoSequence*> out;
  for (int i : idx) out.push_back(&corpus[static_cast<std::size_t>(i)]);
  return out;
}

Corpus copy_subset(const Corpus& corpus, const std::vector<int>& idx) {
  Corpus out;
  for (int i : idx) out.push_back(corpus[static_cast<std::size_t>(i)]);
  return out;
}

std::vector<UncertaintyKind> all_modes() {
  return {UncertaintyKind::ensemble, UncertaintyKind::mc_dropout, UncertaintyKind::bayesian};
}

int member_count(const ExperimentConfig& c, UncertaintyKind kind) {
  return kind == UncertaintyKind::ensemble ? c.forecaster.ensemble_members : 1;
}

UncertaintyMode inference_mode(const ExperimentConfig& c, UncertaintyKind kind) {
  switch (kind) {
    case UncertaintyKind::ensemble: return UncertaintyMode::ensemble(c.forecaster.ensemble_members);
    case UncertaintyKind::mc_dropout:
      return UncertaintyMode::mc_dropout(c.forecaster.samples, c.forecaster.model.dropout_rate);
    case UncertaintyKind::bayesian: return UncertaintyMode::bayesian(c.forecaster.samples);
  }
  throw ValidationError("unknown uncertainty mode");
}

fs::path member_stem(const ExperimentConfig& c, int fold, UncertaintyKind kind, int member) {
  return c.output / "forecaster" / ("fold" + std::to_string(fold)) / to_string(kind) /
         ("member" + std::to_string(member));
}

std::vector<ForecastRecord> load_dump(const ExperimentConfig& c, int fold, UncertaintyKind kind,
                                      const std::string& split, const Taxonomy& tax) {
  const auto path = forecast_dump_path(c, fold, kind, split);
  require_file(path, "run train-forecaster first");
  return load_forecast_dump(path, tax);
}

fs::path selector_dir(const ExperimentConfig& c, int fold) {
  return c.output / "selector" / ("fold" + std::to_string(fold));
}

// ---- selector bookkeeping ----------------------------------------------------

struct SelectorTask {
  int fold = 0;
  SelectorVariant variant = SelectorVariant::tcn;
  double gamma = 0.0;
  int seed_index = 0;
};

std::vector<SelectorTask> selector_tasks(const ExperimentConfig& c) {
  std::vector<SelectorTask> tasks;
  for (int f = 0; f < c.splits.folds; ++f)
    for (auto v : c.selector.variants)
      for (double g : c.selector.gammas)
        for (int s = 0; s < c.selector.seeds; ++s) tasks.push_back({f, v, g, s});
  return tasks;
}

struct SelectorReport {
  std::vector<ScoreRow> test;
  std::vector<ScoreRow> validation;
  std::vector<ScoreRow> baselines;
};

SelectorReport load_selector_report(const ExperimentConfig& c) {
  const auto path = c.output / "selector" / "report.json";
  require_file(path, "run train-selector first");
  const json j = read_json(path);
  SelectorReport r;
  for (const auto& row : j.at("test")) r.test.push_back(score_row_from_json(row));
  for (const auto& row : j.at("validation")) r.validation.push_back(score_row_from_json(row));
  for (const auto& row : j.at("baselines")) r.baselines.push_back(score_row_from_json(row));
  return r;
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double stddev(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

bool same(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(a)); }

}  // namespace

// ---- public helpers ----------------------------------------------------------

std::string format_grid_value(double v) { return grid_label(v); }

fs::path forecast_dump_path(const ExperimentConfig& config, int fold, UncertaintyKind mode, const std::string& split) {
  return config.output / "forecaster" / ("fold" + std::to_string(fold)) / to_string(mode) / (split + ".jsonl");
}

fs::path selector_stem(const ExperimentConfig& config, int fold, SelectorVariant variant, double gamma, int seed_index,
                       double beta) {
  return selector_dir(config, fold) / to_string(variant) /
         ("g" + format_grid_value(gamma) + "_s" + std::to_string(seed_index) + "_b" + format_grid_value(beta));
}

DataBundle load_data(const ExperimentConfig& config) {
  const auto dir = data_dir(config);
  const std::string hint = "run gen-data first";
  require_file(dir / "taxonomy.tsv", hint);
  require_file(dir / "corpus.jsonl", hint);
  require_file(dir / "folds.json", hint);
  require_file(dir / "regions.json", hint);

  DataBundle b{load_mapping(dir / "taxonomy.tsv"), {}, {}, {}};
  const std::string text = detail::read_text_file(dir / "corpus.jsonl");
  std::size_t pos = 0;
  int line_no = 0;
  std::map<std::string, int> index;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    const auto line = detail::trim(std::string_view(text).substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      std::optional<nnet::Tensor2D> features;
      if (!j.at("features").is_null()) features = tensor_from_json(j.at("features"));
      auto id = j.at("id").get<std::string>();
      index[id] = static_cast<int>(b.corpus.size());
      b.corpus.push_back(
          VideoSequence::from_frames(std::move(id), j.at("frames").get<std::vector<int>>(), b.taxonomy, features));
    } catch (const std::exception& e) {
      throw ParseError((dir / "corpus.jsonl").string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }

  const json folds = read_json(dir / "folds.json");
  auto ids_to_indices = [&](const json& ids) {
    std::vector<int> out;
    for (const auto& id : ids) {
      auto it = index.find(id.get<std::string>());
      if (it == index.end()) throw ValidationError("folds.json names unknown video '" + id.get<std::string>() + "'");
      out.push_back(it->second);
    }
    return out;
  };
  for (const auto& f : folds) {
    b.folds.push_back({ids_to_indices(f.at("train")), ids_to_indices(f.at("validation")), ids_to_indices(f.at("test"))});
  }
  if (static_cast<int>(b.folds.size()) != config.splits.folds)
    throw ConfigError("splits.folds", "data stage was generated with " + std::to_string(b.folds.size()) +
                                          " folds; rerun gen-data");

  const json regions = read_json(dir / "regions.json");
  for (auto it = regions.begin(); it != regions.end(); ++it) {
    const int label = b.taxonomy.find_fine(it.key());
    if (label < 0) throw ValidationError("regions.json names unknown label '" + it.key() + "'");
    b.regions[label] = it.value().get<std::string>();
  }
  return b;
}

// ---- stages ------------------------------------------------------------------

void gen_data(const ExperimentConfig& config, const RunOptions&) {
  run_stage("gen-data", [&] {
    StageTimer timer;
    config.validate();
    const Taxonomy tax = load_mapping(config.taxonomy);
    Corpus corpus;
    std::map<int, std::string> regions;
    if (config.corpus.source == CorpusSource::grammar) {
      const GrammarSpec spec = load_grammar(config.corpus.grammar, tax);
      corpus = generate_corpus(spec, config.corpus.videos, derive_seed(config.seed, "corpus"), tax);
      for (const auto& node : spec.nodes) {
        if (node.region.empty()) continue;
        for (int label : node.emissions) {
          auto [it, inserted] = regions.emplace(label, node.region);
          if (!inserted && it->second != node.region) it->second = "mixed";
        }
      }
    } else {
      corpus = load_annotations(config.corpus.annotations, tax);
    }
    if (static_cast<int>(corpus.size()) < config.splits.folds)
      throw ConfigError("splits.folds", "corpus has " + std::to_string(corpus.size()) + " videos, fewer than the folds");
    for (const auto& v : corpus) {
      try {
        (void)split_observation(v, config.protocol.alpha, config.protocol.horizon_fraction);
      } catch (const ValidationError& e) {
        throw ConfigError("protocol", "video '" + v.id() + "': " + e.what());
      }
    }
    const auto folds =
        make_splits(static_cast<int>(corpus.size()), config.splits.folds, derive_seed(config.seed, "splits"),
                    config.splits.validation_fraction);

    const auto dir = data_dir(config);
    fs::create_directories(dir);
    save_mapping(dir / "taxonomy.tsv", tax);

    std::string lines;
    for (const auto& v : corpus) {
      ojson j;
      j["id"] = v.id();
      j["frames"] = v.frames_fine();
      j["features"] = v.features() ? ojson(tensor_json(*v.features())) : ojson();
      lines += j.dump() + "\n";
    }
    detail::write_text_file(dir / "corpus.jsonl", lines);
    detail::write_text_file(dir / "manifest.jsonl", corpus_manifest(corpus));
    if (fs::exists(dir / "annotations")) fs::remove_all(dir / "annotations");
    save_annotations(dir / "annotations", corpus, tax);

    ojson fj = ojson::array();
    for (const auto& f : folds) {
      auto names = [&](const std::vector<int>& idx) {
        ojson a = ojson::array();
        for (int i : idx) a.push_back(corpus[static_cast<std::size_t>(i)].id());
        return a;
      };
      fj.push_back({{"train", names(f.train)}, {"validation", names(f.validation)}, {"test", names(f.test)}});
    }
    write_json(dir / "folds.json", fj);

    ojson rj = ojson::object();
    for (const auto& [label, region] : regions) rj[tax.fine_name(label)] = region;
    write_json(dir / "regions.json", rj);

    record_stage(config, "gen-data", timer.seconds(),
                 {dir / "taxonomy.tsv", dir / "corpus.jsonl", dir / "manifest.jsonl", dir / "folds.json",
                  dir / "regions.json", dir / "annotations"});
  });
}

void train_forecasters(const ExperimentConfig& config, const RunOptions& options) {
  run_stage("train-forecaster", [&] {
    StageTimer timer;
    config.validate();
    const DataBundle data = load_data(config);
    const Taxonomy& tax = data.taxonomy;
    const auto& modes = config.forecaster.modes;
    const std::uint64_t base = derive_seed(config.seed, "forecaster");

    struct MemberTask {
      int fold;
      UncertaintyKind kind;
      int member;
    };
    std::vector<MemberTask> tasks;
    for (int f = 0; f < config.splits.folds; ++f)
      for (auto kind : modes)
        for (int k = 0; k < member_count(config, kind); ++k) tasks.push_back({f, kind, k});

    std::vector<std::optional<Forecaster>> models(tasks.size());
    parallel_for(static_cast<int>(tasks.size()), options.jobs, [&](int i) {
      const auto& t = tasks[static_cast<std::size_t>(i)];
      const auto& fold = data.folds[static_cast<std::size_t>(t.fold)];
      ForecasterConfig cfg = config.forecaster.model;
      cfg.kind = t.kind;
      const std::uint64_t seed =
          derive_seed(derive_seed(base, static_cast<std::uint64_t>(t.fold)), to_string(t.kind) + "/" + std::to_string(t.member));
      const Corpus train = copy_subset(data.corpus, fold.train);
      const Corpus validation = copy_subset(data.corpus, fold.validation);
      try {
        Forecaster model = validation.empty() ? train_forecaster(train, cfg, seed, tax)
                                              : train_forecaster(train, validation, cfg, seed, tax);
        save_forecaster(member_stem(config, t.fold, t.kind, t.member), model,
                        ForecasterInfo{t.kind, seed, tax.fingerprint(), cfg});
        models[static_cast<std::size_t>(i)].emplace(std::move(model));
      } catch (const std::exception& e) {
        throw Error("fold " + std::to_string(t.fold) + " " + to_string(t.kind) + " member " + std::to_string(t.member) +
                    ": " + e.what());
      }
    });

    struct DumpTask {
      int fold;
      UncertaintyKind kind;
      std::string split;
    };
    std::vector<DumpTask> dumps;
    for (int f = 0; f < config.splits.folds; ++f)
      for (auto kind : modes)
        for (const char* split : {"validation", "test"}) dumps.push_back({f, kind, split});

    parallel_for(static_cast<int>(dumps.size()), options.jobs, [&](int i) {
      const auto& d = dumps[static_cast<std::size_t>(i)];
      std::vector<const Forecaster*> members;
      for (std::size_t k = 0; k < tasks.size(); ++k)
        if (tasks[k].fold == d.fold && tasks[k].kind == d.kind) members.push_back(&*models[k]);
      const auto& fold = data.folds[static_cast<std::size_t>(d.fold)];
      const auto& idx = d.split == "test" ? fold.test : fold.validation;
      const UncertaintyMode mode = inference_mode(config, d.kind);
      std::vector<ForecastRecord> records;
      for (const VideoSequence* v : subset(data.corpus, idx)) {
        try {
          const auto split = split_observation(*v, config.protocol.alpha, config.protocol.horizon_fraction);
          const auto ctx = make_context(*v, split, tax.fine_count(), config.forecaster.model.context_input);
          const std::uint64_t seed = derive_seed(config.seed, "predict/" + to_string(d.kind) + "/" + v->id());
          ForecastRecord rec;
          rec.video_id = v->id();
          rec.observed = split.observed;
          rec.total_frames = split.total_frames;
          rec.truth_fine.assign(v->frames_fine().begin() + split.future_begin(),
                                v->frames_fine().begin() + split.future_end());
          rec.forecast = predict_future(members, ctx, split.horizon, mode, seed, tax,
                                        config.forecaster.model.max_segments);
          records.push_back(std::move(rec));
        } catch (const std::exception& e) {
          throw Error("video '" + v->id() + "' (fold " + std::to_string(d.fold) + ", " + to_string(d.kind) +
                      "): " + e.what());
        }
      }
      save_forecast_dump(forecast_dump_path(config, d.fold, d.kind, d.split), records);
    });

    std::vector<fs::path> artifacts;
    for (std::size_t k = 0; k < tasks.size(); ++k) {
      const auto stem = member_stem(config, tasks[k].fold, tasks[k].kind, tasks[k].member);
      artifacts.push_back(fs::path(stem) += ".ckpt");
      artifacts.push_back(fs::path(stem) += ".json");
    }
    for (const auto& d : dumps) artifacts.push_back(forecast_dump_path(config, d.fold, d.kind, d.split));
    record_stage(config, "train-forecaster", timer.seconds(), artifacts);
  });
}

void train_selectors(const ExperimentConfig& config, const RunOptions& options) {
  run_stage("train-selector", [&] {
    StageTimer timer;
    config.validate();
    const DataBundle data = load_data(config);
    const Taxonomy& tax = data.taxonomy;
    const auto kind = config.selector.forecast_mode;
    if (std::find(config.forecaster.modes.begin(), config.forecaster.modes.end(), kind) ==
        config.forecaster.modes.end())
      throw ConfigError("selector.forecast_mode", "mode '" + to_string(kind) + "' is not in forecaster.modes");

    const int folds = config.splits.folds;
    std::vector<SelectorDataset> train_sets(folds), early_sets(folds), test_sets(folds);
    std::vector<fs::path> artifacts;
    for (int f = 0; f < folds; ++f) {
      SelectorDataset pool;
      for (auto& r : load_dump(config, f, kind, "validation", tax))
        pool.push_back(make_selector_sample(r.video_id, r.forecast, r.truth_fine));
      for (auto& r : load_dump(config, f, kind, "test", tax))
        test_sets[f].push_back(make_selector_sample(r.video_id, r.forecast, r.truth_fine));

      // Hash order keeps the held-out subset independent of the dump order.
      const std::uint64_t split_seed = derive_seed(config.seed, "selector-split/" + std::to_string(f));
      std::vector<std::pair<std::uint64_t, std::size_t>> order;
      for (std::size_t i = 0; i < pool.size(); ++i) order.emplace_back(derive_seed(split_seed, pool[i].video_id), i);
      std::sort(order.begin(), order.end());
      const int n = static_cast<int>(pool.size());
      const int held = std::max(1, static_cast<int>(std::lround(config.selector.early_stop_fraction * n)));
      if (n - held < 1)
        throw ConfigError("selector.early_stop_fraction",
                          "fold " + std::to_string(f) + " has " + std::to_string(n) +
                              " forecast-validation videos; nothing left to train the selector on");
      for (int i = 0; i < n; ++i) {
        auto& dst = i < held ? early_sets[f] : train_sets[f];
        dst.push_back(pool[order[static_cast<std::size_t>(i)].second]);
      }
      const auto dir = selector_dir(config, f);
      save_selector_dataset(dir / "train.jsonl", train_sets[f]);
      save_selector_dataset(dir / "early_stop.jsonl", early_sets[f]);
      save_selector_dataset(dir / "test.jsonl", test_sets[f]);
      for (const char* name : {"train.jsonl", "early_stop.jsonl", "test.jsonl"}) artifacts.push_back(dir / name);
    }

    const auto tasks = selector_tasks(config);
    const auto& betas = config.betas;
    std::vector<std::vector<ScoreRow>> test_rows(tasks.size()), val_rows(tasks.size());
    const std::uint64_t base = derive_seed(config.seed, "selector");
    parallel_for(static_cast<int>(tasks.size()), options.jobs, [&](int i) {
      const auto& t = tasks[static_cast<std::size_t>(i)];
      SelectorTrainConfig tc = config.selector.train;
      tc.arch.variant = t.variant;
      tc.loss.gamma = t.gamma;
      // Same initialisation across the gamma grid for a given replicate.
      const std::uint64_t seed =
          derive_seed(base, "fold" + std::to_string(t.fold) + "/" + to_string(t.variant) + "/" + std::to_string(t.seed_index));
      std::vector<SelectorFit> fits;
      try {
        fits = train_selector_multi(train_sets[t.fold], early_sets[t.fold], tc, betas, seed, tax);
      } catch (const std::exception& e) {
        throw Error("fold " + std::to_string(t.fold) + " " + to_string(t.variant) + " gamma " +
                    format_grid_value(t.gamma) + " seed " + std::to_string(t.seed_index) + ": " + e.what());
      }
      for (const auto& fit : fits) {
        nlohmann::json extra = {{"fold", t.fold},           {"gamma", t.gamma},
                                {"seed_index", t.seed_index}, {"seed", hex64(seed)},
                                {"beta", fit.beta},         {"best_epoch", fit.best_epoch},
                                {"best_validation", fit.best_validation}};
        save_selector(selector_stem(config, t.fold, t.variant, t.gamma, t.seed_index, fit.beta), fit.model, extra);
        ScoreRow row;
        row.experiment = "selector";
        row.fold = t.fold;
        row.selector = to_string(t.variant);
        row.gamma = t.gamma;
        row.beta = fit.beta;
        row.seed = t.seed_index;
        row.best_epoch = fit.best_epoch;
        row.split = "test";
        row.tally = evaluate_selector(fit.model, test_sets[t.fold], tax);
        test_rows[static_cast<std::size_t>(i)].push_back(row);
        row.split = "validation";
        row.tally = evaluate_selector(fit.model, early_sets[t.fold], tax);
        val_rows[static_cast<std::size_t>(i)].push_back(row);
      }
    });

    SelectorReport report;
    for (auto& rows : test_rows) report.test.insert(report.test.end(), rows.begin(), rows.end());
    for (auto& rows : val_rows) report.validation.insert(report.validation.end(), rows.begin(), rows.end());
    for (int f = 0; f < folds; ++f) {
      for (const char* split : {"test", "validation"}) {
        const auto& set = std::string(split) == "test" ? test_sets[f] : early_sets[f];
        const std::pair<const char*, WeightedTally> rules[] = {
            {"all_fine", evaluate_constant(set, Granularity::fine, tax)},
            {"all_coarse", evaluate_constant(set, Granularity::coarse, tax)},
            {"oracle", evaluate_oracle(set, tax)}};
        for (double beta : betas) {
          for (const auto& [name, tally] : rules) {
            ScoreRow row;
            row.experiment = "baseline";
            row.fold = f;
            row.split = split;
            row.selector = name;
            row.gamma = std::numeric_limits<double>::quiet_NaN();
            row.beta = beta;
            row.tally = tally;
            report.baselines.push_back(row);
          }
        }
      }
    }

    auto csv_of = [](const std::vector<ScoreRow>& rows) {
      CsvWriter csv(score_columns());
      for (const auto& r : rows) csv.row(score_cells(r));
      return csv.str();
    };
    const auto root = config.output / "selector";
    detail::write_text_file(root / "report.csv", csv_of(report.test));
    detail::write_text_file(root / "validation_report.csv", csv_of(report.validation));
    detail::write_text_file(root / "baselines.csv", csv_of(report.baselines));
    ojson rj;
    for (const auto& [name, rows] : {std::pair{"test", &report.test}, std::pair{"validation", &report.validation},
                                     std::pair{"baselines", &report.baselines}}) {
      ojson a = ojson::array();
      for (const auto& r : *rows) a.push_back(to_json(r));
      rj[name] = a;
    }
    write_json(root / "report.json", rj);
    for (const char* name : {"report.csv", "validation_report.csv", "baselines.csv", "report.json"})
      artifacts.push_back(root / name);
    for (const auto& t : tasks)
      for (double beta : betas) {
        const auto stem = selector_stem(config, t.fold, t.variant, t.gamma, t.seed_index, beta);
        artifacts.push_back(fs::path(stem) += ".ckpt");
        artifacts.push_back(fs::path(stem) += ".json");
      }
    record_stage(config, "train-selector", timer.seconds(), artifacts);
  });
}

void sweep(const ExperimentConfig& config, const RunOptions&) {
  run_stage("sweep", [&] {
    StageTimer timer;
    config.validate();
    const SelectorReport report = load_selector_report(config);
    for (const auto& t : selector_tasks(config))
      for (double beta : config.betas) {
        auto ckpt = selector_stem(config, t.fold, t.variant, t.gamma, t.seed_index, beta);
        ckpt += ".ckpt";
        require_file(ckpt, "run train-selector first");
      }

    const auto& gammas = config.selector.gammas;
    const auto& betas = config.betas;
    std::vector<fs::path> artifacts;
    for (auto variant : config.selector.variants) {
      const std::string vname = to_string(variant);
      // cells[g][b] -> one entry per (fold, seed)
      struct Cell {
        std::vector<double> weighted, fine, coarse, fine_selected;
      };
      std::vector<std::vector<Cell>> cells(gammas.size(), std::vector<Cell>(betas.size()));
      // fine_selected per (beta, seed, gamma) summed over folds
      std::vector<std::vector<std::vector<double>>> trend(
          betas.size(), std::vector<std::vector<double>>(static_cast<std::size_t>(config.selector.seeds),
                                                         std::vector<double>(gammas.size(), 0.0)));
      std::size_t matched = 0;
      for (const auto& r : report.validation) {
        if (r.selector != vname) continue;
        std::size_t gi = gammas.size(), bi = betas.size();
        for (std::size_t i = 0; i < gammas.size(); ++i)
          if (same(gammas[i], r.gamma)) gi = i;
        for (std::size_t i = 0; i < betas.size(); ++i)
          if (same(betas[i], r.beta)) bi = i;
        if (gi == gammas.size() || bi == betas.size() || r.seed < 0 || r.seed >= config.selector.seeds) continue;
        auto& c = cells[gi][bi];
        c.weighted.push_back(r.tally.weighted(r.beta));
        c.fine.push_back(r.tally.fine_accuracy());
        c.coarse.push_back(r.tally.coarse_accuracy());
        c.fine_selected.push_back(1.0 - r.tally.fraction_coarse());
        trend[bi][static_cast<std::size_t>(r.seed)][gi] += (1.0 - r.tally.fraction_coarse()) / config.splits.folds;
        ++matched;
      }
      const std::size_t expected =
          gammas.size() * betas.size() * static_cast<std::size_t>(config.selector.seeds * config.splits.folds);
      if (matched != expected)
        throw Error("selector report has " + std::to_string(matched) + " validation rows for " + vname +
                    ", expected " + std::to_string(expected) + "; rerun train-selector");

      const auto dir = config.output / "sweep" / vname;
      const std::pair<const char*, std::vector<double> Cell::*> metrics[] = {{"weighted", &Cell::weighted},
                                                                              {"fine", &Cell::fine},
                                                                              {"coarse", &Cell::coarse},
                                                                              {"fine_selected", &Cell::fine_selected}};
      for (const auto& [name, member] : metrics) {
        const auto path = dir / (std::string("heatmap_") + name + ".csv");
        detail::write_text_file(path, heatmap_csv(gammas, betas, [&, m = member](std::size_t i, std::size_t j) {
                                  return mean(cells[i][j].*m);
                                }));
        artifacts.push_back(path);
      }

      CsvWriter csv({"beta", "seed", "spearman"});
      for (std::size_t b = 0; b < betas.size(); ++b) {
        std::vector<double> rhos;
        for (int s = 0; s < config.selector.seeds; ++s) {
          const double rho = spearman(gammas, trend[b][static_cast<std::size_t>(s)]);
          rhos.push_back(rho);
          csv.row({grid_label(betas[b]), std::to_string(s), fmt(rho)});
        }
        csv.row({grid_label(betas[b]), "mean", fmt(mean(rhos))});
      }
      detail::write_text_file(dir / "gamma_trend.csv", csv.str());
      artifacts.push_back(dir / "gamma_trend.csv");
    }
    record_stage(config, "sweep", timer.seconds(), artifacts);
  });
}

void timeline(const ExperimentConfig& config, const std::vector<std::string>& videos, const RunOptions& options) {
  run_stage("timeline", [&] {
    StageTimer timer;
    config.validate();
    const DataBundle data = load_data(config);
    const Taxonomy& tax = data.taxonomy;
    const auto& tc = config.timeline;
    if (std::find(config.selector.variants.begin(), config.selector.variants.end(), tc.variant) ==
        config.selector.variants.end())
      throw ConfigError("timeline.variant", "variant '" + to_string(tc.variant) + "' is not in selector.variants");
    if (std::none_of(config.betas.begin(), config.betas.end(), [&](double b) { return same(b, tc.beta); }))
      throw ConfigError("timeline.beta", "beta " + format_grid_value(tc.beta) + " is not in betas");
    if (tc.seed_index >= config.selector.seeds)
      throw ConfigError("timeline.seed_index", "exceeds selector.seeds");

    std::map<std::string, int> test_fold;
    for (int f = 0; f < config.splits.folds; ++f)
      for (int i : data.folds[static_cast<std::size_t>(f)].test) test_fold[data.corpus[static_cast<std::size_t>(i)].id()] = f;

    std::vector<std::string> ids = videos.empty() ? tc.videos : videos;
    if (ids.empty())
      for (const auto& v : data.corpus) ids.push_back(v.id());
    for (const auto& id : ids)
      if (!test_fold.count(id)) throw Error("unknown video id '" + id + "'");

    std::vector<double> gammas = config.selector.gammas;
    std::sort(gammas.begin(), gammas.end());

    std::vector<int> used_folds;
    for (const auto& id : ids) used_folds.push_back(test_fold[id]);
    std::sort(used_folds.begin(), used_folds.end());
    used_folds.erase(std::unique(used_folds.begin(), used_folds.end()), used_folds.end());

    struct FoldAssets {
      std::map<std::string, ForecastRecord> records;
      std::vector<SelectorModel> selectors;
    };
    std::map<int, FoldAssets> assets;
    for (int f : used_folds) {
      FoldAssets a;
      for (auto& r : load_dump(config, f, config.selector.forecast_mode, "test", tax)) a.records.emplace(r.video_id, r);
      for (double g : gammas) {
        const auto stem = selector_stem(config, f, tc.variant, g, tc.seed_index, tc.beta);
        require_file(fs::path(stem) += ".ckpt", "run train-selector first");
        a.selectors.push_back(load_selector(stem));
      }
      assets.emplace(f, std::move(a));
    }

    const auto dir = config.output / "timeline";
    std::vector<TimelineData> results(ids.size());
    parallel_for(static_cast<int>(ids.size()), options.jobs, [&](int i) {
      const auto& id = ids[static_cast<std::size_t>(i)];
      const auto& a = assets.at(test_fold.at(id));
      auto it = a.records.find(id);
      if (it == a.records.end()) throw Error("video '" + id + "' missing from its fold's test dump");
      const auto& rec = it->second;
      TimelineData td;
      td.video_id = id;
      td.observed = rec.observed;
      td.truth_fine = rec.truth_fine;
      td.fine_argmax = rec.forecast.fine_argmax;
      td.coarse_argmax = rec.forecast.coarse_argmax;
      td.oracle = derive_labels(rec.forecast, rec.truth_fine);
      td.gammas = gammas;
      const auto features = build_features(rec.forecast);
      for (const auto& model : a.selectors) td.selections.push_back(model.select(features).selection);
      detail::write_text_file(dir / (id + ".csv"), timeline_csv(td, tax));
      detail::write_text_file(dir / (id + ".svg"), timeline_svg(td, tax));
      results[static_cast<std::size_t>(i)] = std::move(td);
    });

    CsvWriter summary({"video_id", "fold", "frames", "monotone_frames", "monotone_fraction", "oracle_fine_fraction"});
    long frames = 0, monotone = 0;
    std::vector<fs::path> artifacts;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const auto& td = results[i];
      const auto mono = td.monotone();
      const long n = static_cast<long>(mono.size());
      const long m = std::accumulate(mono.begin(), mono.end(), 0L);
      const long oracle_fine = std::count(td.oracle.begin(), td.oracle.end(), 0);
      frames += n;
      monotone += m;
      summary.row({ids[i], std::to_string(test_fold.at(ids[i])), std::to_string(n), std::to_string(m),
                   fmt(static_cast<double>(m) / static_cast<double>(n)),
                   fmt(static_cast<double>(oracle_fine) / static_cast<double>(n))});
      artifacts.push_back(dir / (ids[i] + ".csv"));
      artifacts.push_back(dir / (ids[i] + ".svg"));
    }
    detail::write_text_file(dir / "summary.csv", summary.str());
    ojson overall = {{"variant", to_string(tc.variant)},
                     {"beta", tc.beta},
                     {"seed_index", tc.seed_index},
                     {"videos", ids.size()},
                     {"frames", frames},
                     {"monotone_frames", monotone},
                     {"monotone_fraction", static_cast<double>(monotone) / static_cast<double>(frames)}};
    write_json(dir / "overall.json", overall);
    artifacts.push_back(dir / "summary.csv");
    artifacts.push_back(dir / "overall.json");
    record_stage(config, "timeline", timer.seconds(), artifacts);
  });
}

void uncertainty_report(const ExperimentConfig& config, const RunOptions&) {
  run_stage("uncertainty-report", [&] {
    StageTimer timer;
    config.validate();
    const DataBundle data = load_data(config);
    const Taxonomy& tax = data.taxonomy;
    std::vector<UncertaintyKind> modes;
    for (auto kind : all_modes())
      if (std::find(config.forecaster.modes.begin(), config.forecaster.modes.end(), kind) !=
          config.forecaster.modes.end())
        modes.push_back(kind);
    constexpr int kBins = 20;
    std::set<std::string> region_names;
    for (const auto& [label, region] : data.regions) region_names.insert(region);

    CsvWriter table({"mode", "nll", "mse_nll", "mean_variance", "videos", "frames"});
    CsvWriter curves({"mode", "future_frame", "mean_nll", "frames"});
    CsvWriter bins({"mode", "bin", "position", "mean_nll", "frames"});
    CsvWriter regions({"mode", "region", "mean_nll", "frames"});
    for (auto kind : modes) {
      const std::string name = to_string(kind);
      double nll_sum = 0.0, var_sum = 0.0;
      long frames = 0, var_cells = 0;
      std::vector<nnet::Tensor2D> predicted, truth;
      std::vector<double> curve_sum;
      std::vector<long> curve_n;
      std::vector<double> bin_sum(kBins, 0.0);
      std::vector<long> bin_n(kBins, 0);
      std::map<std::string, std::pair<double, long>> region_acc;
      for (int f = 0; f < config.splits.folds; ++f) {
        for (const auto& r : load_dump(config, f, kind, "test", tax)) {
          const auto per_frame = frame_nll(r.forecast.fine_mean, r.truth_fine);
          const int h = static_cast<int>(per_frame.size());
          if (static_cast<int>(curve_sum.size()) < h) {
            curve_sum.resize(static_cast<std::size_t>(h), 0.0);
            curve_n.resize(static_cast<std::size_t>(h), 0);
          }
          for (int t = 0; t < h; ++t) {
            const double v = per_frame[static_cast<std::size_t>(t)];
            nll_sum += v;
            curve_sum[static_cast<std::size_t>(t)] += v;
            ++curve_n[static_cast<std::size_t>(t)];
            const int b = std::min(kBins - 1, t * kBins / h);
            bin_sum[static_cast<std::size_t>(b)] += v;
            ++bin_n[static_cast<std::size_t>(b)];
            auto rit = data.regions.find(r.truth_fine[static_cast<std::size_t>(t)]);
            if (rit != data.regions.end()) {
              region_acc[rit->second].first += v;
              ++region_acc[rit->second].second;
            }
          }
          frames += h;
          for (double v : r.forecast.fine_var.values()) var_sum += v;
          var_cells += static_cast<long>(r.forecast.fine_var.size());
          predicted.push_back(r.forecast.fine_mean);
          truth.push_back(one_hot_track(r.truth_fine, tax.fine_count()));
        }
      }
      if (frames == 0) throw Error("no test frames for mode '" + name + "'");
      table.row({name, fmt(nll_sum / static_cast<double>(frames)), fmt(mse_nll(predicted, truth)),
                 fmt(var_sum / static_cast<double>(var_cells)), std::to_string(predicted.size()),
                 std::to_string(frames)});
      for (std::size_t t = 0; t < curve_sum.size(); ++t)
        curves.row({name, std::to_string(t + 1), fmt(curve_sum[t] / static_cast<double>(curve_n[t])),
                    std::to_string(curve_n[t])});
      for (int b = 0; b < kBins; ++b) {
        const auto bi = static_cast<std::size_t>(b);
        bins.row({name, std::to_string(b), fmt((b + 0.5) / kBins),
                  bin_n[bi] ? fmt(bin_sum[bi] / static_cast<double>(bin_n[bi])) : "", std::to_string(bin_n[bi])});
      }
      for (const auto& region : region_names) {
        const auto it = region_acc.find(region);
        const long n = it == region_acc.end() ? 0 : it->second.second;
        regions.row({name, region, n ? fmt(it->second.first / static_cast<double>(n)) : "", std::to_string(n)});
      }
    }
    const auto dir = config.output / "uncertainty";
    detail::write_text_file(dir / "uncertainty.csv", table.str());
    detail::write_text_file(dir / "nll_curves.csv", curves.str());
    detail::write_text_file(dir / "curve_bins.csv", bins.str());
    detail::write_text_file(dir / "regions.csv", regions.str());
    record_stage(config, "uncertainty-report", timer.seconds(),
                 {dir / "uncertainty.csv", dir / "nll_curves.csv", dir / "curve_bins.csv", dir / "regions.csv"});
  });
}

void score(const ExperimentConfig& config, const RunOptions&) {
  run_stage("score", [&] {
    StageTimer timer;
    config.validate();
    const DataBundle data = load_data(config);
    const Taxonomy& tax = data.taxonomy;
    const SelectorReport report = load_selector_report(config);

    // Aggregate every (split, selector, gamma, beta) over folds and seeds.
    struct Key {
      std::string split, selector;
      double gamma, beta;
    };
    std::vector<Key> keys;
    std::vector<std::vector<const ScoreRow*>> groups;
    auto add = [&](const ScoreRow& r) {
      for (std::size_t i = 0; i < keys.size(); ++i) {
        const auto& k = keys[i];
        const bool gamma_match = (std::isnan(k.gamma) && std::isnan(r.gamma)) || same(k.gamma, r.gamma);
        if (k.split == r.split && k.selector == r.selector && gamma_match && same(k.beta, r.beta)) {
          groups[i].push_back(&r);
          return;
        }
      }
      keys.push_back({r.split, r.selector, r.gamma, r.beta});
      groups.push_back({&r});
    };
    for (const auto& r : report.test) add(r);
    for (const auto& r : report.validation) add(r);
    for (const auto& r : report.baselines) add(r);

    CsvWriter scores({"split", "selector", "gamma", "beta", "runs", "weighted_accuracy", "weighted_accuracy_std",
                      "fine_accuracy", "coarse_accuracy", "fraction_coarse"});
    ojson sj = ojson::array();
    for (std::size_t i = 0; i < keys.size(); ++i) {
      std::vector<double> w, fa, ca, fc;
      for (const ScoreRow* r : groups[i]) {
        w.push_back(r->tally.weighted(r->beta));
        fa.push_back(r->tally.fine_accuracy());
        ca.push_back(r->tally.coarse_accuracy());
        fc.push_back(r->tally.fraction_coarse());
      }
      const auto& k = keys[i];
      scores.row({k.split, k.selector, std::isnan(k.gamma) ? "" : grid_label(k.gamma), grid_label(k.beta),
                  std::to_string(w.size()), fmt(mean(w)), fmt(stddev(w)), fmt(mean(fa)), fmt(mean(ca)),
                  fmt(mean(fc))});
      sj.push_back({{"split", k.split},
                    {"selector", k.selector},
                    {"gamma", std::isnan(k.gamma) ? ojson() : ojson(k.gamma)},
                    {"beta", k.beta},
                    {"runs", w.size()},
                    {"weighted_accuracy", mean(w)},
                    {"weighted_accuracy_std", stddev(w)},
                    {"fine_accuracy", mean(fa)},
                    {"coarse_accuracy", mean(ca)},
                    {"fraction_coarse", mean(fc)}});
    }

    // Selector at gamma = 1/beta against the all-fine rule, test split.
    CsvWriter gain({"selector", "beta", "gamma", "selector_weighted", "all_fine_weighted", "gain"});
    ojson gj = ojson::array();
    auto find_mean = [&](const std::string& selector, double gamma, double beta) {
      for (std::size_t i = 0; i < keys.size(); ++i) {
        const auto& k = keys[i];
        const bool gm = std::isnan(gamma) ? std::isnan(k.gamma) : (!std::isnan(k.gamma) && same(k.gamma, gamma));
        if (k.split == "test" && k.selector == selector && gm && same(k.beta, beta)) {
          std::vector<double> w;
          for (const ScoreRow* r : groups[i]) w.push_back(r->tally.weighted(r->beta));
          return mean(w);
        }
      }
      return std::numeric_limits<double>::quiet_NaN();
    };
    for (auto variant : config.selector.variants) {
      for (double beta : config.betas) {
        const double gamma = 1.0 / beta;
        if (std::none_of(config.selector.gammas.begin(), config.selector.gammas.end(),
                         [&](double g) { return same(g, gamma); }))
          continue;
        const double sel = find_mean(to_string(variant), gamma, beta);
        const double fine = find_mean("all_fine", std::numeric_limits<double>::quiet_NaN(), beta);
        gain.row({to_string(variant), grid_label(beta), grid_label(gamma), fmt(sel), fmt(fine), fmt(sel - fine)});
        gj.push_back({{"selector", to_string(variant)},
                      {"beta", beta},
                      {"gamma", gamma},
                      {"selector_weighted", sel},
                      {"all_fine_weighted", fine},
                      {"gain", sel - fine}});
      }
    }

    // Forecast quality per mode on the test folds.
    CsvWriter forecast({"mode", "moc_accuracy", "frame_accuracy", "nll", "videos"});
    ojson fj = ojson::array();
    for (auto kind : config.forecaster.modes) {
      std::vector<double> moc;
      double nll_sum = 0.0;
      long frames = 0, correct = 0;
      for (int f = 0; f < config.splits.folds; ++f) {
        for (const auto& r : load_dump(config, f, kind, "test", tax)) {
          moc.push_back(moc_accuracy(r.forecast.fine_argmax, r.truth_fine, tax));
          for (double v : frame_nll(r.forecast.fine_mean, r.truth_fine)) nll_sum += v;
          for (std::size_t t = 0; t < r.truth_fine.size(); ++t)
            correct += r.forecast.fine_argmax[t] == r.truth_fine[t] ? 1 : 0;
          frames += static_cast<long>(r.truth_fine.size());
        }
      }
      const double frame_acc = static_cast<double>(correct) / static_cast<double>(frames);
      const double nll_mean = nll_sum / static_cast<double>(frames);
      forecast.row({to_string(kind), fmt(mean(moc)), fmt(frame_acc), fmt(nll_mean), std::to_string(moc.size())});
      fj.push_back({{"mode", to_string(kind)},
                    {"moc_accuracy", mean(moc)},
                    {"frame_accuracy", frame_acc},
                    {"nll", nll_mean},
                    {"videos", moc.size()}});
    }

    const auto dir = config.output / "scores";
    detail::write_text_file(dir / "scores.csv", scores.str());
    detail::write_text_file(dir / "selector_gain.csv", gain.str());
    detail::write_text_file(dir / "forecast_scores.csv", forecast.str());
    write_json(dir / "scores.json", {{"selections", sj}, {"selector_gain", gj}, {"forecast", fj}});
    record_stage(config, "score", timer.seconds(),
                 {dir / "scores.csv", dir / "selector_gain.csv", dir / "forecast_scores.csv", dir / "scores.json"});
  });
}

void run_all(const ExperimentConfig& config, const RunOptions& options) {
  gen_data(config, options);
  train_forecasters(config, options);
  train_selectors(config, options);
  sweep(config, options);
  timeline(config, {}, options);
  uncertainty_report(config, options);
  score(config, options);
}

}  // namespace islands::experiment
