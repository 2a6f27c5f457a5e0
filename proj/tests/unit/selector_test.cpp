/*
 * Copyright 2026 The Islands Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include "islands/dump_io.hpp"
#include "islands/error.hpp"
#include "islands/experiment/reports.hpp"
#include "islands/metrics.hpp"
#include "islands/nnet/conv1d.hpp"
#include "islands/nnet/gradcheck.hpp"
#include "islands/selector.hpp"
#include "test_support.hpp"

namespace islands {
namespace {

using nnet::Tensor2D;

/// Forecast whose fine argmax is right exactly where `correct` is 1.
std::pair<ForecastDistribution, std::vector<int>> forecast_with_pattern(const std::vector<int>& correct,
                                                                        const Taxonomy& tax) {
  const int h = static_cast<int>(correct.size());
  Tensor2D mean(h, tax.fine_count(), 0.02 / (tax.fine_count() - 1));
  std::vector<int> truth;
  for (int t = 0; t < h; ++t) {
    const int predicted = t % tax.fine_count();
    mean(t, predicted) = 0.98;
    truth.push_back(correct[t] ? predicted : (predicted + 1) % tax.fine_count());
  }
  return {make_forecast(mean, Tensor2D(h, tax.fine_count()), tax), truth};
}

// ---- labels and features --------------------------------------------------------

TEST(DeriveLabels, AllCorrectIsAllFine) {
  const auto tax = testing::small_taxonomy();
  const auto [f, truth] = forecast_with_pattern({1, 1, 1, 1}, tax);
  EXPECT_EQ(derive_labels(f, truth), (std::vector<int>{0, 0, 0, 0}));
}

TEST(DeriveLabels, NeverCorrectIsAllCoarse) {
  const auto tax = testing::small_taxonomy();
  const auto [f, truth] = forecast_with_pattern({0, 0, 0}, tax);
  EXPECT_EQ(derive_labels(f, truth), (std::vector<int>{1, 1, 1}));
}

TEST(DeriveLabels, SixFramePattern) {
  const auto tax = testing::small_taxonomy();
  const auto [f, truth] = forecast_with_pattern({1, 1, 0, 0, 1, 0}, tax);
  EXPECT_EQ(derive_labels(f, truth), (std::vector<int>{0, 0, 1, 1, 0, 1}));
}

TEST(DeriveLabels, LengthMismatchRejected) {
  const auto tax = testing::small_taxonomy();
  const auto [f, truth] = forecast_with_pattern({1, 1}, tax);
  EXPECT_THROW(derive_labels(f, std::vector<int>{0}), ValidationError);
}

TEST(DeriveLabels, MatchesPerFrameRecount) {
  const auto tax = testing::small_taxonomy();
  Rng rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    const auto f = testing::random_forecast(20, tax, rng);
    const auto truth = testing::random_labels(20, tax.fine_count(), rng);
    const auto y = derive_labels(f, truth);
    for (int t = 0; t < 20; ++t) {
      int best = 0;
      for (int k = 1; k < tax.fine_count(); ++k)
        if (f.fine_mean(t, k) > f.fine_mean(t, best)) best = k;
      EXPECT_EQ(y[t], best == truth[t] ? 0 : 1);
    }
  }
}

TEST(BuildFeatures, WidthAndBlocks) {
  const auto tax = Taxonomy({"a", "b", "c", "d"}, {"X", "Y"}, {0, 1, 1, 0});
  Tensor2D uniform(3, 4, 0.25);
  const auto f = make_forecast(uniform, Tensor2D(3, 4), tax);
  const auto o = build_features(f);
  EXPECT_EQ(o.cols(), 6);
  for (int t = 0; t < 3; ++t) {
    for (int k = 0; k < 4; ++k) EXPECT_EQ(o(t, k), 0.25);
    EXPECT_NEAR(o(t, 4), 0.5, 1e-15);
  }
}

TEST(BuildFeatures, CoarseBlockIsGroupSum) {
  const auto tax = testing::small_taxonomy();
  Rng rng(13);
  const auto o = build_features(testing::random_forecast(10, tax, rng));
  for (int t = 0; t < 10; ++t) {
    for (int c = 0; c < tax.coarse_count(); ++c) {
      double s = 0.0;
      for (int k : tax.group(c)) s += o(t, k);
      EXPECT_NEAR(o(t, tax.fine_count() + c), s, 1e-12);
    }
  }
}

// ---- loss -------------------------------------------------------------------------

TEST(SelectorLoss, GammaZeroIsAccuracyTerm) {
  Rng rng(1);
  const std::vector<Tensor2D> p{testing::random_probabilities(7, 2, rng)};
  const std::vector<std::vector<int>> y{testing::random_labels(7, 2, rng)};
  const auto l = selector_loss(p, y, {.gamma = 0.0});
  EXPECT_EQ(l.total, l.accuracy_term);
}

TEST(SelectorLoss, PerfectProbabilitiesNearZero) {
  const std::vector<Tensor2D> p{Tensor2D{{1, 0}, {0, 1}, {1, 0}}};
  const std::vector<std::vector<int>> y{{0, 1, 0}};
  EXPECT_LE(selector_loss(p, y, {.gamma = 3.0}).total, 3 * -std::log(1 - 1e-12));
}

TEST(SelectorLoss, FourFrameHandExample) {
  const std::vector<Tensor2D> p{Tensor2D(4, 2, 0.5)};
  const std::vector<std::vector<int>> y{{0, 0, 1, 1}};
  const auto l = selector_loss(p, y, {.gamma = 1.0});
  EXPECT_NEAR(l.accuracy_term, std::log(2.0), 1e-12);
  EXPECT_NEAR(l.granularity_term, std::log(2.0), 1e-12);
  EXPECT_NEAR(l.total, 2.0 * std::log(2.0), 1e-12);
}

TEST(SelectorLoss, HorizonNormalisation) {
  const std::vector<Tensor2D> p{Tensor2D(4, 2, 0.5)};
  const std::vector<std::vector<int>> y{{0, 0, 1, 1}};
  const auto l = selector_loss(p, y, {.gamma = 1.0, .norm = GranularityNorm::horizon});
  EXPECT_NEAR(l.granularity_term, 0.5 * std::log(2.0), 1e-12);
  EXPECT_NEAR(l.total, 1.5 * std::log(2.0), 1e-12);
}

TEST(SelectorLoss, DecomposesLinearlyInGamma) {
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Tensor2D> p;
    std::vector<std::vector<int>> y;
    for (int v = 0; v < 3; ++v) {
      p.push_back(testing::random_probabilities(5 + v, 2, rng));
      y.push_back(testing::random_labels(5 + v, 2, rng));
    }
    const double gamma = 0.37 * trial;
    const auto base = selector_loss(p, y, {.gamma = 0.0});
    const auto full = selector_loss(p, y, {.gamma = gamma});
    EXPECT_NEAR(full.total, base.total + gamma * full.granularity_term, 1e-12);
  }
}

TEST(SelectorLoss, IncreasingGammaIncreasesLoss) {
  const std::vector<Tensor2D> p{Tensor2D{{0.9, 0.1}, {0.4, 0.6}}};
  const std::vector<std::vector<int>> y{{0, 1}};
  double prev = -1.0;
  for (double g : {0.0, 0.5, 1.0, 2.0}) {
    const double total = selector_loss(p, y, {.gamma = g}).total;
    EXPECT_GT(total, prev);
    prev = total;
  }
}

TEST(SelectorLoss, PredictedIndicatorCoversPredictedFineFrames) {
  // frames 0 and 2 are predicted fine; y marks 0 and 1 fine
  const std::vector<Tensor2D> p{Tensor2D{{0.8, 0.2}, {0.3, 0.7}, {0.6, 0.4}}};
  const std::vector<std::vector<int>> y{{0, 0, 1}};
  const auto l = selector_loss(p, y, {.gamma = 1.0, .indicator = IndicatorMode::predicted});
  const double expected = 0.5 * (-std::log(0.8) - std::log(0.4));
  EXPECT_NEAR(l.granularity_term, expected, 1e-12);
}

TEST(SelectorLoss, LengthMismatchRejected) {
  const std::vector<Tensor2D> p{Tensor2D(3, 2, 0.5)};
  const std::vector<std::vector<int>> y{{0, 1}};
  EXPECT_THROW(selector_loss(p, y, {}), ValidationError);
  const std::vector<std::vector<int>> ok{{0, 1, 0}};
  EXPECT_THROW(selector_loss(p, ok, {.gamma = -1.0}), ValidationError);
}

TEST(SelectorLoss, LogitGradientMatchesFiniteDifferences) {
  Rng rng(3);
  for (auto ind : {IndicatorMode::truth, IndicatorMode::predicted}) {
    for (auto norm : {GranularityNorm::restricted, GranularityNorm::horizon}) {
      std::vector<Tensor2D> logits{testing::random_tensor(6, 2, rng), testing::random_tensor(4, 2, rng)};
      const std::vector<std::vector<int>> y{testing::random_labels(6, 2, rng), testing::random_labels(4, 2, rng)};
      const SelectorLossOptions opts{.gamma = 1.7, .indicator = ind, .norm = norm};
      std::vector<Tensor2D> grads;
      selector_loss_from_logits(logits, y, opts, &grads);
      for (std::size_t v = 0; v < logits.size(); ++v) {
        const auto numeric =
            nnet::numeric_gradient(logits[v], [&] { return selector_loss_from_logits(logits, y, opts, nullptr).total; });
        EXPECT_LT(nnet::max_relative_error(grads[v], numeric), 1e-6);
      }
    }
  }
}

TEST(SelectorLoss, LogitAndProbabilityFormsAgree) {
  Rng rng(4);
  std::vector<Tensor2D> logits{testing::random_tensor(6, 2, rng)};
  const std::vector<std::vector<int>> y{testing::random_labels(6, 2, rng)};
  std::vector<Tensor2D> probs{nnet::softmax_rows(logits[0])};
  EXPECT_NEAR(selector_loss_from_logits(logits, y, {.gamma = 2.0}, nullptr).total,
              selector_loss(probs, y, {.gamma = 2.0}).total, 1e-12);
}

// ---- models ----------------------------------------------------------------------------

/// Moves zero-initialised biases off the ReLU kinks.
void jitter_biases(SelectorModel& model, Rng& rng) {
  std::uniform_real_distribution<double> d(-0.2, 0.2);
  for (auto& p : model.params().all())
    if (p.name.find("bias") != std::string::npos)
      for (auto& v : p.value.values()) v = d(rng);
}

double model_loss(SelectorModel& model, const std::vector<Tensor2D>& xs, const std::vector<std::vector<int>>& ys,
                  const SelectorLossOptions& opts) {
  std::vector<Tensor2D> logits;
  std::vector<SelectorModel::Cache> caches(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) logits.push_back(model.logits(xs[i], &caches[i]));
  std::vector<Tensor2D> grads;
  const double loss = selector_loss_from_logits(logits, ys, opts, &grads).total;
  for (std::size_t i = 0; i < xs.size(); ++i) model.backward(caches[i], grads[i]);
  return loss;
}

TEST(SelectorModel, MlpGradientsMatchFiniteDifferences) {
  Rng rng(5);
  SelectorModel model({.variant = SelectorVariant::mlp, .hidden = 5}, 8, 1);
  jitter_biases(model, rng);
  const std::vector<Tensor2D> xs{testing::random_probabilities(6, 8, rng)};
  const std::vector<std::vector<int>> ys{testing::random_labels(6, 2, rng)};
  const auto r = nnet::grad_check(model.params(), [&] { return model_loss(model, xs, ys, {.gamma = 1.0}); });
  EXPECT_LT(r.max_relative_error, 1e-4) << r.worst_parameter;
}

TEST(SelectorModel, TcnGradientsMatchFiniteDifferences) {
  Rng rng(6);
  SelectorModel model({.variant = SelectorVariant::tcn, .channels = 3, .blocks = 4, .kernel = 3}, 8, 2);
  jitter_biases(model, rng);
  const std::vector<Tensor2D> xs{testing::random_probabilities(20, 8, rng), testing::random_probabilities(9, 8, rng)};
  const std::vector<std::vector<int>> ys{testing::random_labels(20, 2, rng), testing::random_labels(9, 2, rng)};
  const auto r = nnet::grad_check(model.params(), [&] { return model_loss(model, xs, ys, {.gamma = 0.5}); });
  EXPECT_LT(r.max_relative_error, 1e-4) << r.worst_parameter;
}

TEST(SelectorModel, TcnReceptiveFieldBoundsInfluence) {
  Rng rng(7);
  SelectorModel model({.variant = SelectorVariant::tcn, .channels = 4, .blocks = 3, .kernel = 3}, 6, 3);
  const auto dil = model.arch().dilations();
  const int radius = (nnet::receptive_field(3, dil) - 1) / 2;
  EXPECT_EQ(radius, 7);
  const auto x = testing::random_probabilities(40, 6, rng);
  const auto base = model.logits(x);
  const int t = 20;
  for (int s = 0; s < 40; ++s) {
    auto xp = x;
    for (int c = 0; c < 6; ++c) xp(s, c) += 0.3;
    const auto y = model.logits(xp);
    if (std::abs(s - t) > radius) {
      EXPECT_EQ(y(t, 0), base(t, 0)) << s;
      EXPECT_EQ(y(t, 1), base(t, 1)) << s;
    }
  }
}

TEST(SelectorModel, OutputsArePairsAndTiesGoFine) {
  Rng rng(8);
  SelectorModel model({.variant = SelectorVariant::mlp}, 8, 4);
  const auto track = model.select(testing::random_probabilities(12, 8, rng));
  for (int t = 0; t < 12; ++t) EXPECT_NEAR(track.probabilities(t, 0) + track.probabilities(t, 1), 1.0, 1e-12);
  EXPECT_EQ(select_from_probabilities(Tensor2D{{0.5, 0.5}, {0.4, 0.6}}), (std::vector<int>{0, 1}));
}

TEST(SelectorModel, DimensionMismatchRejected) {
  SelectorModel model({.variant = SelectorVariant::tcn}, 8, 4);
  EXPECT_THROW(model.logits(Tensor2D(5, 7)), ShapeError);
}

TEST(SelectorModel, CheckpointRoundTrip) {
  SelectorModel model({.variant = SelectorVariant::tcn, .channels = 5, .blocks = 2}, 8, 4);
  const auto dir = testing::scratch_dir("selector_ckpt");
  save_selector(dir / "s", model, {{"note", "x"}});
  const auto back = load_selector(dir / "s");
  EXPECT_EQ(back.arch().channels, 5);
  Rng rng(1);
  const auto x = testing::random_probabilities(9, 8, rng);
  EXPECT_EQ(back.logits(x), model.logits(x));
}

// ---- composition ---------------------------------------------------------------------

TEST(Compose, AllFineAndAllCoarse) {
  const auto tax = testing::small_taxonomy();
  Rng rng(9);
  const auto f = testing::random_forecast(8, tax, rng);
  const auto fine = compose_output(std::vector<int>(8, 0), f);
  const auto coarse = compose_output(std::vector<int>(8, 1), f);
  for (int t = 0; t < 8; ++t) {
    EXPECT_EQ(fine[t], (MixedLabel{Granularity::fine, f.fine_argmax[t]}));
    EXPECT_EQ(coarse[t], (MixedLabel{Granularity::coarse, f.coarse_argmax[t]}));
  }
}

TEST(Compose, OracleBeatsConstantRulesAtBetaOne) {
  const auto tax = testing::small_taxonomy();
  Rng rng(10);
  for (int trial = 0; trial < 50; ++trial) {
    const auto f = testing::random_forecast(15, tax, rng);
    const auto truth = testing::random_labels(15, tax.fine_count(), rng);
    const auto oracle = oracle_selector(f, truth);
    auto score = [&](const std::vector<int>& sel) {
      return weighted_accuracy(sel, f.fine_argmax, f.coarse_argmax, truth, tax, 1.0);
    };
    EXPECT_GE(score(oracle.selection), score(std::vector<int>(15, 0)));
    EXPECT_GE(score(oracle.selection), score(std::vector<int>(15, 1)));
  }
}

// ---- training ----------------------------------------------------------------------------

SelectorDataset threshold_dataset(int videos, int frames, std::uint64_t seed, const Taxonomy& tax) {
  Rng rng(seed);
  std::uniform_real_distribution<double> peak(0.2, 0.95);
  SelectorDataset data;
  for (int v = 0; v < videos; ++v) {
    Tensor2D mean(frames, tax.fine_count());
    std::vector<int> truth;
    for (int t = 0; t < frames; ++t) {
      const int top = (v + t) % tax.fine_count();
      const double p = peak(rng);
      for (int k = 0; k < tax.fine_count(); ++k) mean(t, k) = k == top ? p : (1.0 - p) / (tax.fine_count() - 1);
      truth.push_back(p > 0.5 ? top : (top + 1) % tax.fine_count());
    }
    data.push_back(make_selector_sample("v" + std::to_string(v),
                                        make_forecast(mean, Tensor2D(frames, tax.fine_count()), tax), truth));
  }
  return data;
}

double label_accuracy(const SelectorModel& model, const SelectorDataset& data) {
  long hit = 0, n = 0;
  for (const auto& s : data) {
    const auto sel = model.select(s.features).selection;
    for (std::size_t t = 0; t < sel.size(); ++t, ++n) hit += sel[t] == s.labels[t] ? 1 : 0;
  }
  return static_cast<double>(hit) / static_cast<double>(n);
}

TEST(SelectorTraining, ConstantLabelsAreLearned) {
  const auto tax = testing::small_taxonomy();
  auto data = threshold_dataset(6, 10, 1, tax);
  for (auto& s : data) {
    s.truth_fine = fine_argmax_from_features(s.features, tax);
    s.labels.assign(s.labels.size(), 0);
  }
  SelectorTrainConfig cfg;
  cfg.arch = {.variant = SelectorVariant::mlp, .hidden = 8};
  cfg.epochs = 300;
  cfg.patience = 300;
  cfg.learning_rate = 1e-2;
  const auto model = train_selector(data, data, cfg, 0.5, 2, tax);
  EXPECT_EQ(label_accuracy(model, data), 1.0);
}

TEST(SelectorTraining, ThresholdRuleIsLearnedByMlp) {
  const auto tax = testing::small_taxonomy();
  const auto train = threshold_dataset(40, 20, 2, tax);
  const auto val = threshold_dataset(10, 20, 3, tax);
  SelectorTrainConfig cfg;
  cfg.arch = {.variant = SelectorVariant::mlp, .hidden = 16};
  cfg.epochs = 150;
  cfg.patience = 150;
  cfg.learning_rate = 1e-2;
  const auto model = train_selector(train, val, cfg, 1.0, 3, tax);
  EXPECT_GE(label_accuracy(model, val), 0.95);
}

TEST(SelectorTraining, GammaRaisesFineShare) {
  const auto tax = testing::small_taxonomy();
  const auto train = threshold_dataset(30, 20, 4, tax);
  const auto val = threshold_dataset(10, 20, 5, tax);
  const std::vector<double> gammas{0.0, 0.5, 1.0, 2.0, 4.0};
  double rho_sum = 0.0;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    std::vector<double> fine_share;
    for (double g : gammas) {
      SelectorTrainConfig cfg;
      cfg.arch = {.variant = SelectorVariant::mlp, .hidden = 8};
      cfg.loss.gamma = g;
      cfg.epochs = 20;
      cfg.patience = 20;
      const auto model = train_selector(train, val, cfg, 1.0, seed, tax);
      fine_share.push_back(1.0 - evaluate_selector(model, val, tax).fraction_coarse());
    }
    rho_sum += experiment::spearman(gammas, fine_share);
  }
  EXPECT_GE(rho_sum / 3.0, 0.8);
}

TEST(SelectorTraining, MultiBetaFitsOnePerBeta) {
  const auto tax = testing::small_taxonomy();
  const auto data = threshold_dataset(8, 10, 6, tax);
  SelectorTrainConfig cfg;
  cfg.arch = {.variant = SelectorVariant::tcn, .channels = 4, .blocks = 2};
  cfg.epochs = 5;
  const std::vector<double> betas{0.5, 1.0, 2.0};
  const auto fits = train_selector_multi(data, data, cfg, betas, 1, tax);
  ASSERT_EQ(fits.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(fits[i].beta, betas[i]);
    EXPECT_GE(fits[i].best_epoch, 0);
    EXPECT_NEAR(fits[i].best_validation, evaluate_selector(fits[i].model, data, tax).weighted(betas[i]), 1e-12);
  }
}

TEST(SelectorTraining, DeterministicInSeed) {
  const auto tax = testing::small_taxonomy();
  const auto data = threshold_dataset(8, 10, 6, tax);
  SelectorTrainConfig cfg;
  cfg.arch = {.variant = SelectorVariant::tcn, .channels = 4, .blocks = 2};
  cfg.epochs = 4;
  const auto a = train_selector(data, data, cfg, 1.0, 9, tax);
  const auto b = train_selector(data, data, cfg, 1.0, 9, tax);
  for (std::size_t i = 0; i < a.params().count(); ++i) EXPECT_EQ(a.params().all()[i].value, b.params().all()[i].value);
}

TEST(SelectorTraining, EmptyDatasetRejected) {
  const auto tax = testing::small_taxonomy();
  EXPECT_THROW(train_selector({}, {}, SelectorTrainConfig{}, 1.0, 1, tax), ValidationError);
}

// ---- dataset files --------------------------------------------------------------------

TEST(SelectorDatasetFile, RoundTrip) {
  const auto tax = testing::small_taxonomy();
  const auto data = threshold_dataset(3, 7, 8, tax);
  const auto dir = testing::scratch_dir("selector_dataset");
  save_selector_dataset(dir / "d.jsonl", data);
  const auto back = load_selector_dataset(dir / "d.jsonl", tax);
  ASSERT_EQ(back.size(), data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    EXPECT_EQ(back[i].video_id, data[i].video_id);
    EXPECT_EQ(back[i].features, data[i].features);
    EXPECT_EQ(back[i].labels, data[i].labels);
    EXPECT_EQ(back[i].truth_fine, data[i].truth_fine);
  }
}

TEST(ForecastDumpFile, RoundTripAndLineNumbers) {
  const auto tax = testing::small_taxonomy();
  Rng rng(11);
  std::vector<ForecastRecord> recs;
  for (int i = 0; i < 3; ++i)
    recs.push_back({"v" + std::to_string(i), 4, 20, testing::random_labels(8, 6, rng), testing::random_forecast(8, tax, rng)});
  const auto dir = testing::scratch_dir("dump");
  save_forecast_dump(dir / "d.jsonl", recs);
  const auto back = load_forecast_dump(dir / "d.jsonl", tax);
  ASSERT_EQ(back.size(), 3u);
  EXPECT_EQ(back[2].forecast.fine_mean, recs[2].forecast.fine_mean);
  EXPECT_EQ(back[1].truth_fine, recs[1].truth_fine);
  {
    std::ofstream out(dir / "bad.jsonl");
    out << "{}\n{\"id\": 3}\n";
  }
  try {
    load_forecast_dump(dir / "bad.jsonl", tax);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find(":1"), std::string::npos) << e.what();
  }
}

}  // namespace
}  // namespace islands
