/*
 * Copyright 2026 The Islands Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#include <gtest/gtest.h>

#include <cmath>

#include "islands/error.hpp"
#include "islands/nnet/checkpoint.hpp"
#include "islands/nnet/conv1d.hpp"
#include "islands/nnet/gradcheck.hpp"
#include "islands/nnet/gru.hpp"
#include "islands/nnet/layers.hpp"
#include "islands/nnet/loss.hpp"
#include "islands/nnet/optim.hpp"
#include "islands/nnet/params.hpp"
#include "test_support.hpp"

namespace islands::nnet {
namespace {

using testing::random_tensor;

double weighted_sum(const Tensor2D& y, const Tensor2D& w) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += y.values()[i] * w.values()[i];
  return s;
}

// ---- dense -------------------------------------------------------------------

TEST(Dense, IdentityWeightsPassThrough) {
  Rng rng(1);
  const auto x = random_tensor(3, 4, rng);
  Tensor2D w(4, 4), b(1, 4);
  for (int i = 0; i < 4; ++i) w(i, i) = 1.0;
  EXPECT_EQ(dense_forward(x, w, b), x);
}

TEST(Dense, ZeroInputGivesBias) {
  Tensor2D x(3, 2), w{{1, 2}, {3, 4}}, b{{0.5, -2.0}};
  const auto y = dense_forward(x, w, b);
  for (int r = 0; r < 3; ++r) {
    EXPECT_EQ(y(r, 0), 0.5);
    EXPECT_EQ(y(r, 1), -2.0);
  }
}

TEST(Dense, ShapeMismatchThrows) {
  EXPECT_THROW(dense_forward(Tensor2D(2, 3), Tensor2D(4, 2), Tensor2D(1, 2)), ShapeError);
}

TEST(Dense, GradientsMatchFiniteDifferences) {
  Rng rng(2);
  ParamStore store;
  const auto layer = Dense::create(store, "fc", 7, 4);
  store.init_glorot(rng, true);
  Tensor2D x = random_tensor(5, 7, rng);
  const auto wout = random_tensor(5, 4, rng);
  Tensor2D dx;
  auto loss = [&] {
    const auto y = layer.forward(store, x);
    dx = layer.backward(store, x, wout);
    return weighted_sum(y, wout);
  };
  EXPECT_LT(grad_check(store, loss).max_relative_error, 1e-4);
  loss();
  const auto analytic = dx;
  const auto numeric = numeric_gradient(x, [&] { return weighted_sum(layer.forward(store, x), wout); });
  EXPECT_LT(max_relative_error(analytic, numeric), 1e-4);
}

// ---- recurrent cell ------------------------------------------------------------

TEST(Gru, ZeroWeightsGiveConstantState) {
  ParamStore store;
  const auto cell = GruCell::create(store, "g", 3, 4);
  for (auto& v : store[cell.bh].value.values()) v = 0.7;
  for (auto& v : store[cell.bz].value.values()) v = 0.2;
  Rng rng(3);
  const Tensor2D h0(1, 4);
  const auto a = gru_step(store, cell, h0, random_tensor(1, 3, rng));
  const auto b = gru_step(store, cell, h0, random_tensor(1, 3, rng));
  EXPECT_EQ(a, b);
  const double z = 1.0 / (1.0 + std::exp(-0.2));
  EXPECT_NEAR(a(0, 0), z * std::tanh(0.7), 1e-15);
}

TEST(Gru, TenStepUnrollMatchesFiniteDifferences) {
  Rng rng(4);
  ParamStore store;
  const auto cell = GruCell::create(store, "g", 3, 5);
  store.init_glorot(rng, true);
  std::vector<Tensor2D> xs;
  for (int t = 0; t < 10; ++t) xs.push_back(random_tensor(2, 3, rng));
  const auto wout = random_tensor(2, 5, rng);
  auto loss = [&] {
    std::vector<GruCache> caches(10);
    Tensor2D h(2, 5);
    for (int t = 0; t < 10; ++t) h = gru_step(store, cell, h, xs[t], &caches[t]);
    Tensor2D dh = wout;
    for (int t = 9; t >= 0; --t) dh = gru_step_backward(store, cell, caches[t], dh);
    return weighted_sum(h, wout);
  };
  const auto r = grad_check(store, loss);
  EXPECT_LT(r.max_relative_error, 1e-4) << r.worst_parameter;
}

TEST(Gru, StateStaysBounded) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed);
    ParamStore store;
    const auto cell = GruCell::create(store, "g", 4, 6);
    store.init_glorot(rng, true);
    Tensor2D h(1, 6);
    for (int t = 0; t < 20; ++t) h = gru_step(store, cell, h, random_tensor(1, 4, rng, 5.0));
    for (double v : h.values()) EXPECT_LT(std::abs(v), 1.0);
  }
}

// ---- dilated convolution --------------------------------------------------------

TEST(Conv1d, CentredDeltaIsIdentity) {
  Rng rng(5);
  const auto x = random_tensor(9, 3, rng);
  Tensor2D w(3 * 3, 3), b(1, 3);
  for (int c = 0; c < 3; ++c) w(3 + c, c) = 1.0;  // middle tap
  EXPECT_EQ(conv1d_forward(x, w, b, 3, 4), x);
}

TEST(Conv1d, DilationTwoTouchesOnlyItsTaps) {
  Rng rng(6);
  const auto w = random_tensor(3 * 2, 2, rng);
  const Tensor2D b(1, 2);
  const auto x = random_tensor(12, 2, rng);
  const auto base = conv1d_forward(x, w, b, 3, 2);
  const int t = 6;
  for (int s = 0; s < 12; ++s) {
    auto xp = x;
    xp(s, 0) += 1.0;
    xp(s, 1) -= 0.5;
    const auto y = conv1d_forward(xp, w, b, 3, 2);
    const bool changed = y(t, 0) != base(t, 0) || y(t, 1) != base(t, 1);
    EXPECT_EQ(changed, s == t - 2 || s == t || s == t + 2) << "source frame " << s;
  }
}

TEST(Conv1d, GradientsMatchFiniteDifferences) {
  Rng rng(7);
  ParamStore store;
  const auto w = store.add("w", 3 * 3, 4);
  const auto b = store.add("b", 1, 4);
  store.init_glorot(rng, true);
  Tensor2D x = random_tensor(10, 3, rng);
  const auto wout = random_tensor(10, 4, rng);
  Tensor2D dx;
  auto loss = [&] {
    const auto y = conv1d_forward(x, store.value(w), store.value(b), 3, 2);
    dx = conv1d_backward(x, store.value(w), wout, 3, 2, store.grad(w), store.grad(b));
    return weighted_sum(y, wout);
  };
  EXPECT_LT(grad_check(store, loss).max_relative_error, 1e-4);
  loss();
  const auto analytic = dx;
  const auto numeric =
      numeric_gradient(x, [&] { return weighted_sum(conv1d_forward(x, store.value(w), store.value(b), 3, 2), wout); });
  EXPECT_LT(max_relative_error(analytic, numeric), 1e-4);
}

TEST(Conv1d, ReceptiveField) {
  const std::vector<int> d{1, 2, 4, 8};
  EXPECT_EQ(receptive_field(3, d), 31);
}

TEST(Conv1d, EvenWidthRejected) {
  EXPECT_THROW(conv1d_forward(Tensor2D(4, 1), Tensor2D(2, 1), Tensor2D(1, 1), 2, 1), Error);
}

// ---- softmax cross entropy ---------------------------------------------------------

TEST(SoftmaxCrossEntropy, UniformLogits) {
  const std::vector<double> logits(4, 0.3);
  EXPECT_NEAR(softmax_cross_entropy(logits, 2).loss, std::log(4.0), 1e-12);
}

TEST(SoftmaxCrossEntropy, LargeMarginGoesToZero) {
  const std::vector<double> logits{0.0, 60.0, 0.0};
  EXPECT_LT(softmax_cross_entropy(logits, 1).loss, 1e-20);
}

TEST(SoftmaxCrossEntropy, GradientSumsToZero) {
  const std::vector<double> logits{0.1, -2.0, 1.5, 0.7};
  const auto r = softmax_cross_entropy(logits, 3);
  double s = 0.0;
  for (double g : r.grad) s += g;
  EXPECT_NEAR(s, 0.0, 1e-15);
  const auto p = softmax(logits);
  EXPECT_NEAR(r.grad[3], p[3] - 1.0, 1e-15);
}

TEST(SoftmaxCrossEntropy, BadTargetThrows) {
  const std::vector<double> logits{0.0, 1.0};
  EXPECT_THROW(softmax_cross_entropy(logits, 2), std::out_of_range);
}

// ---- dropout -------------------------------------------------------------------------

TEST(Dropout, ZeroRateIsAllOnes) {
  const auto m = dropout_mask(4, 5, 0.0, std::uint64_t{1});
  for (double v : m.values()) EXPECT_EQ(v, 1.0);
}

TEST(Dropout, MaskMeanIsOne) {
  const auto m = dropout_mask(1000, 100, 0.3, std::uint64_t{9});
  double s = 0.0;
  for (double v : m.values()) s += v;
  EXPECT_NEAR(s / static_cast<double>(m.size()), 1.0, 0.02);
  for (double v : m.values()) EXPECT_TRUE(v == 0.0 || std::abs(v - 1.0 / 0.7) < 1e-15);
}

TEST(Dropout, SameSeedSameMask) {
  EXPECT_EQ(dropout_mask(7, 3, 0.5, std::uint64_t{4}), dropout_mask(7, 3, 0.5, std::uint64_t{4}));
}

TEST(Dropout, RateOutOfRangeThrows) {
  EXPECT_THROW(dropout_mask(2, 2, 1.0, std::uint64_t{1}), ValidationError);
  EXPECT_THROW(dropout_mask(2, 2, -0.1, std::uint64_t{1}), ValidationError);
}

// ---- optimiser, clipping, checkpoints ------------------------------------------------

TEST(Adam, MinimisesQuadratic) {
  ParamStore store;
  const auto p = store.add("p", 1, 3);
  store[p].value = Tensor2D{{3.0, -2.0, 0.5}};
  Adam adam({.learning_rate = 0.05});
  for (int i = 0; i < 2000; ++i) {
    store.zero_grad();
    for (int j = 0; j < 3; ++j) store.grad(p)(0, j) = 2.0 * store.value(p)(0, j);
    adam.step(store);
  }
  for (double v : store.value(p).values()) EXPECT_NEAR(v, 0.0, 1e-3);
}

TEST(Adam, NonFiniteGradientNamesParameter) {
  ParamStore store;
  const auto p = store.add("weights", 1, 1);
  store.grad(p)(0, 0) = std::nan("");
  Adam adam;
  try {
    adam.step(store);
    FAIL();
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("weights"), std::string::npos);
  }
}

TEST(ClipGradNorm, RescalesToMax) {
  ParamStore store;
  const auto p = store.add("p", 1, 2);
  store.grad(p) = Tensor2D{{3.0, 4.0}};
  EXPECT_DOUBLE_EQ(clip_grad_norm(store, 1.0), 5.0);
  EXPECT_NEAR(store.grad(p)(0, 0), 0.6, 1e-15);
  EXPECT_NEAR(store.grad(p)(0, 1), 0.8, 1e-15);
}

TEST(Checkpoint, BitExactRoundTrip) {
  Rng rng(10);
  ParamStore store;
  store.add("a", 3, 4);
  store.add("b", 1, 4);
  store.init_glorot(rng, true);
  store[ParamId{0}].value(0, 0) = 1.0 / 3.0;
  const auto dir = testing::scratch_dir("checkpoint");
  save_params(dir / "m.ckpt", store);
  ParamStore other;
  other.add("a", 3, 4);
  other.add("b", 1, 4);
  load_params(dir / "m.ckpt", other);
  for (std::size_t i = 0; i < store.count(); ++i) EXPECT_EQ(other.all()[i].value, store.all()[i].value);
}

TEST(Checkpoint, ShapeMismatchRejected) {
  ParamStore store;
  store.add("a", 2, 2);
  const auto dir = testing::scratch_dir("checkpoint_shape");
  save_params(dir / "m.ckpt", store);
  ParamStore other;
  other.add("a", 2, 3);
  EXPECT_THROW(load_params(dir / "m.ckpt", other), Error);
}

TEST(Checkpoint, CorruptBytesRejected) {
  EXPECT_THROW(decode_tensors("NOTACKPT"), Error);
}

TEST(Tensor, NonFiniteDetected) {
  Tensor2D t(1, 2);
  EXPECT_TRUE(t.all_finite());
  t(0, 1) = INFINITY;
  EXPECT_FALSE(t.all_finite());
}

}  // namespace
}  // namespace islands::nnet
