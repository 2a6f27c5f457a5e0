/*
 * Copyright 2026 The Islands Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "islands/error.hpp"
#include "islands/metrics.hpp"
#include "islands/selector.hpp"
#include "test_support.hpp"

namespace islands {
namespace {

using nnet::Tensor2D;

// two coarse groups: {0,1} and {2,3}
Taxonomy four_labels() { return Taxonomy({"a", "b", "c", "d"}, {"X", "Y"}, {0, 0, 1, 1}); }

/// Independent per-frame credit sum.
double credit_oracle(const std::vector<int>& sel, const std::vector<int>& fine, const std::vector<int>& coarse,
                     const std::vector<int>& truth, const Taxonomy& tax, double beta) {
  double s = 0.0;
  for (std::size_t t = 0; t < sel.size(); ++t) {
    if (sel[t] == 0 && fine[t] == truth[t]) s += 1.0;
    if (sel[t] == 1 && coarse[t] == tax.map()[truth[t]]) s += beta;
  }
  return s / (static_cast<double>(sel.size()) * std::max(1.0, beta));
}

TEST(WeightedAccuracy, AllFineAllCorrect) {
  const auto tax = four_labels();
  const std::vector<int> truth{0, 1, 2, 3};
  for (double beta : {0.1, 0.5, 1.0})
    EXPECT_EQ(weighted_accuracy(std::vector<int>(4, 0), truth, std::vector<int>{0, 0, 1, 1}, truth, tax, beta), 1.0);
}

TEST(WeightedAccuracy, AllCoarseAllCorrectBetaTwo) {
  const auto tax = four_labels();
  const std::vector<int> truth{0, 1, 2, 3};
  EXPECT_EQ(weighted_accuracy(std::vector<int>(4, 1), std::vector<int>{3, 3, 3, 3}, std::vector<int>{0, 0, 1, 1}, truth,
                              tax, 2.0),
            1.0);
}

TEST(WeightedAccuracy, FourFrameHandExample) {
  const auto tax = four_labels();
  const std::vector<int> truth{0, 1, 2, 3};
  const std::vector<int> fine{0, 0, 3, 3};    // right at frames 0 and 3
  const std::vector<int> coarse{0, 0, 1, 1};  // always right
  const std::vector<int> sel{0, 1, 0, 1};
  EXPECT_DOUBLE_EQ(weighted_accuracy(sel, fine, coarse, truth, tax, 0.5), 0.5);
}

TEST(WeightedAccuracy, CoarseSelectedWithWrongCoarseEarnsNothing) {
  const auto tax = four_labels();
  EXPECT_EQ(weighted_accuracy(std::vector<int>{1}, std::vector<int>{0}, std::vector<int>{1}, std::vector<int>{0}, tax, 1.0),
            0.0);
}

TEST(WeightedAccuracy, Errors) {
  const auto tax = four_labels();
  const std::vector<int> one{0};
  const std::vector<int> two{0, 0};
  EXPECT_THROW(weighted_accuracy(one, two, two, two, tax, 1.0), ValidationError);
  EXPECT_THROW(weighted_accuracy(one, one, one, one, tax, 0.0), ValidationError);
  EXPECT_THROW(weighted_accuracy(one, one, one, one, tax, -1.0), ValidationError);
  EXPECT_THROW(weighted_accuracy({}, {}, {}, {}, tax, 1.0), ValidationError);
}

TEST(WeightedAccuracy, MatchesCreditSumOnRandomTracks) {
  const auto tax = testing::small_taxonomy();
  Rng rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + trial % 17;
    const auto sel = testing::random_labels(n, 2, rng);
    const auto fine = testing::random_labels(n, 6, rng);
    const auto coarse = testing::random_labels(n, 2, rng);
    const auto truth = testing::random_labels(n, 6, rng);
    const double beta = std::pow(2.0, (trial % 9) - 4);
    EXPECT_NEAR(weighted_accuracy(sel, fine, coarse, truth, tax, beta), credit_oracle(sel, fine, coarse, truth, tax, beta),
                1e-12);
  }
}

TEST(WeightedAccuracy, BetaLimits) {
  const auto tax = testing::small_taxonomy();
  Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 5 + trial % 11;
    const auto fine = testing::random_labels(n, 6, rng);
    const auto coarse = testing::random_labels(n, 2, rng);
    const auto truth = testing::random_labels(n, 6, rng);
    double fine_only = 0.0, coarse_only = 0.0;
    for (int t = 0; t < n; ++t) {
      fine_only += fine[t] == truth[t] ? 1.0 : 0.0;
      coarse_only += coarse[t] == tax.map()[truth[t]] ? 1.0 : 0.0;
    }
    fine_only /= n;
    coarse_only /= n;
    const std::vector<int> all_fine(n, 0), all_coarse(n, 1);
    EXPECT_LE(std::abs(weighted_accuracy(all_fine, fine, coarse, truth, tax, 1e-6) - fine_only), 1e-5);
    EXPECT_LE(std::abs(weighted_accuracy(all_coarse, fine, coarse, truth, tax, 1e6) - coarse_only), 1e-5);
  }
}

TEST(WeightedAccuracy, MonotoneInCorrectFrames) {
  const auto tax = four_labels();
  const std::vector<int> truth{0, 1, 2, 3, 0};
  const std::vector<int> sel{0, 0, 1, 0, 1};
  const std::vector<int> coarse{0, 0, 1, 1, 1};
  std::vector<int> fine{3, 3, 3, 0, 3};
  double prev = weighted_accuracy(sel, fine, coarse, truth, tax, 0.7);
  for (int t : {0, 1, 3}) {
    fine[t] = truth[t];
    const double now = weighted_accuracy(sel, fine, coarse, truth, tax, 0.7);
    EXPECT_GE(now, prev);
    prev = now;
  }
}

TEST(WeightedTally, AgreesWithScore) {
  const auto tax = testing::small_taxonomy();
  Rng rng(3);
  WeightedTally total;
  std::vector<int> sel_all, fine_all, coarse_all, truth_all;
  for (int v = 0; v < 5; ++v) {
    const auto sel = testing::random_labels(9, 2, rng);
    const auto fine = testing::random_labels(9, 6, rng);
    const auto coarse = testing::random_labels(9, 2, rng);
    const auto truth = testing::random_labels(9, 6, rng);
    total += tally_selection(sel, fine, coarse, truth, tax);
    sel_all.insert(sel_all.end(), sel.begin(), sel.end());
    fine_all.insert(fine_all.end(), fine.begin(), fine.end());
    coarse_all.insert(coarse_all.end(), coarse.begin(), coarse.end());
    truth_all.insert(truth_all.end(), truth.begin(), truth.end());
  }
  EXPECT_EQ(total.frames, 45);
  EXPECT_EQ(total.fine_selected + total.coarse_selected, 45);
  for (double beta : {0.25, 1.0, 4.0})
    EXPECT_NEAR(total.weighted(beta), weighted_accuracy(sel_all, fine_all, coarse_all, truth_all, tax, beta), 1e-12);
  EXPECT_NEAR(total.fine_accuracy() + total.coarse_accuracy(), total.weighted(1.0), 1e-12);
  EXPECT_NEAR(total.fraction_coarse(), static_cast<double>(std::count(sel_all.begin(), sel_all.end(), 1)) / 45.0, 1e-15);
}

TEST(WeightedAccuracy, OracleDominance) {
  const auto tax = testing::small_taxonomy();
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const auto f = testing::random_forecast(12, tax, rng);
    const auto truth = testing::random_labels(12, 6, rng);
    const auto oracle = oracle_selector(f, truth).selection;
    for (double beta : {0.25, 0.5, 1.0, 2.0, 4.0}) {
      auto score = [&](const std::vector<int>& s) {
        return weighted_accuracy(s, f.fine_argmax, f.coarse_argmax, truth, tax, beta);
      };
      EXPECT_GE(score(oracle), score(std::vector<int>(12, 0)));
      if (beta <= 1.0) {
        EXPECT_GE(score(oracle), score(std::vector<int>(12, 1)));
      }
    }
  }
}

TEST(WeightedAccuracy, OracleNotOptimalAboveBetaOne) {
  // fine right and coarse right: the oracle picks fine (1/2), coarse would earn 2/2
  const auto tax = four_labels();
  const std::vector<int> truth{0};
  const std::vector<int> fine{0}, coarse{0};
  EXPECT_LT(weighted_accuracy(std::vector<int>{0}, fine, coarse, truth, tax, 2.0),
            weighted_accuracy(std::vector<int>{1}, fine, coarse, truth, tax, 2.0));
}

// ---- MoC --------------------------------------------------------------------------

TEST(Moc, Examples) {
  const auto tax = four_labels();
  EXPECT_EQ(moc_accuracy(std::vector<int>{0, 1, 2}, std::vector<int>{0, 1, 2}, tax), 1.0);
  EXPECT_EQ(moc_accuracy(std::vector<int>{1, 1, 1}, std::vector<int>{0, 0, 0}, tax), 0.0);
  EXPECT_DOUBLE_EQ(moc_accuracy(std::vector<int>{0, 1, 1, 1}, std::vector<int>{0, 0, 1, 1}, tax), 0.75);
}

TEST(Moc, Errors) {
  const auto tax = four_labels();
  EXPECT_THROW(moc_accuracy(std::vector<int>{0}, std::vector<int>{0, 1}, tax), ValidationError);
  EXPECT_THROW(moc_accuracy({}, {}, tax), ValidationError);
}

TEST(Moc, PermutationInvariant) {
  const auto tax = testing::small_taxonomy();
  Rng rng(5);
  const std::vector<int> perm{3, 5, 0, 1, 4, 2};
  for (int trial = 0; trial < 30; ++trial) {
    auto pred = testing::random_labels(20, 6, rng);
    auto truth = testing::random_labels(20, 6, rng);
    const double before = moc_accuracy(pred, truth, tax);
    for (auto& x : pred) x = perm[x];
    for (auto& x : truth) x = perm[x];
    EXPECT_NEAR(moc_accuracy(pred, truth, tax), before, 1e-15);
  }
}

// ---- NLL ---------------------------------------------------------------------------

TEST(Nll, OneHotCorrectIsNearZero) {
  EXPECT_LE(nll(one_hot_track(std::vector<int>{0, 2, 1}, 3), std::vector<int>{0, 2, 1}), 1e-11);
}

TEST(Nll, UniformIsLogC) {
  EXPECT_NEAR(nll(Tensor2D(5, 4, 0.25), std::vector<int>{0, 1, 2, 3, 0}), std::log(4.0), 1e-9);
}

TEST(Nll, ZeroProbabilityIsFloored) {
  const double v = nll(Tensor2D{{1.0, 0.0}}, std::vector<int>{1});
  EXPECT_TRUE(std::isfinite(v));
  EXPECT_NEAR(v, -std::log(1e-12), 1e-9);
}

TEST(Nll, LengthMismatchRejected) {
  EXPECT_THROW(nll(Tensor2D(2, 2, 0.5), std::vector<int>{0}), ValidationError);
}

// ---- interpolation and MSE ---------------------------------------------------------

TEST(Interpolate, IdentityAtSourceLength) {
  Rng rng(6);
  const auto x = testing::random_probabilities(7, 3, rng);
  EXPECT_EQ(interpolate_to_length(x, 7), x);
}

TEST(Interpolate, ConstantStaysConstant) {
  const Tensor2D x{{0.2, 0.8}, {0.2, 0.8}, {0.2, 0.8}};
  const auto y = interpolate_to_length(x, 11);
  ASSERT_EQ(y.rows(), 11);
  for (int t = 0; t < 11; ++t) {
    EXPECT_NEAR(y(t, 0), 0.2, 1e-12);
    EXPECT_NEAR(y(t, 1), 0.8, 1e-12);
  }
}

TEST(Interpolate, TwoFramesToThree) {
  const auto y = interpolate_to_length(Tensor2D{{1, 0}, {0, 1}}, 3);
  EXPECT_NEAR(y(0, 0), 1.0, 1e-12);
  EXPECT_NEAR(y(1, 0), 0.5, 1e-12);
  EXPECT_NEAR(y(1, 1), 0.5, 1e-12);
  EXPECT_NEAR(y(2, 1), 1.0, 1e-12);
}

TEST(Interpolate, RowsRenormalised) {
  Rng rng(7);
  const auto y = interpolate_to_length(testing::random_probabilities(5, 4, rng), 23);
  for (int t = 0; t < y.rows(); ++t) {
    double s = 0.0;
    for (int c = 0; c < 4; ++c) s += y(t, c);
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(Interpolate, ShorterTargetRejected) { EXPECT_THROW(interpolate_to_length(Tensor2D(4, 2, 0.5), 3), ValidationError); }

TEST(MseNll, IdenticalCorporaGiveZero) {
  Rng rng(8);
  const std::vector<Tensor2D> a{testing::random_probabilities(4, 3, rng), testing::random_probabilities(9, 3, rng)};
  EXPECT_EQ(mse_nll(a, a), 0.0);
}

TEST(MseNll, SingleFrameHandExample) {
  const std::vector<Tensor2D> pred{Tensor2D{{0.5, 0.5}}};
  const std::vector<Tensor2D> truth{one_hot_track(std::vector<int>{0}, 2)};
  EXPECT_DOUBLE_EQ(mse_nll(pred, truth), 0.5);
}

TEST(MseNll, DuplicationInvariant) {
  Rng rng(9);
  std::vector<Tensor2D> pred, truth;
  for (int v = 0; v < 3; ++v) {
    pred.push_back(testing::random_probabilities(3 + 2 * v, 4, rng));
    truth.push_back(one_hot_track(testing::random_labels(3 + 2 * v, 4, rng), 4));
  }
  auto pred2 = pred, truth2 = truth;
  pred2.insert(pred2.end(), pred.begin(), pred.end());
  truth2.insert(truth2.end(), truth.begin(), truth.end());
  EXPECT_NEAR(mse_nll(pred2, truth2), mse_nll(pred, truth), 1e-14);
}

TEST(MseNll, EmptyCorpusRejected) { EXPECT_THROW(mse_nll({}, {}), ValidationError); }

}  // namespace
}  // namespace islands
