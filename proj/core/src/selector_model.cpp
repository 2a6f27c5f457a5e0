/*
 * Copyright 2026 The Islands Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#include <string>

#include "islands/error.hpp"
#include "islands/nnet/conv1d.hpp"
#include "islands/random.hpp"
#include "islands/selector.hpp"

namespace islands {

std::string to_string(SelectorVariant variant) { return variant == SelectorVariant::mlp ? "mlp" : "tcn"; }

SelectorVariant parse_selector_variant(std::string_view name) {
  if (name == "mlp") return SelectorVariant::mlp;
  if (name == "tcn") return SelectorVariant::tcn;
  throw ValidationError("unknown selector variant '" + std::string(name) + "'");
}

void SelectorArch::validate() const {
  if (hidden < 1) throw ValidationError("selector hidden width must be positive");
  if (channels < 1) throw ValidationError("selector channel count must be positive");
  if (blocks < 1) throw ValidationError("selector needs at least one residual block");
  if (kernel < 1 || kernel % 2 == 0) throw ValidationError("selector kernel width must be odd");
}

std::vector<int> SelectorArch::dilations() const {
  std::vector<int> d;
  for (int l = 0; l < blocks; ++l) d.push_back(1 << l);
  return d;
}

nlohmann::json to_json(const SelectorArch& a) {
  return {{"variant", to_string(a.variant)},
          {"hidden", a.hidden},
          {"channels", a.channels},
          {"blocks", a.blocks},
          {"kernel", a.kernel}};
}

SelectorArch selector_arch_from_json(const nlohmann::json& j) {
  SelectorArch a;
  a.variant = parse_selector_variant(j.at("variant").get<std::string>());
  a.hidden = j.at("hidden").get<int>();
  a.channels = j.at("channels").get<int>();
  a.blocks = j.at("blocks").get<int>();
  a.kernel = j.at("kernel").get<int>();
  return a;
}

SelectorModel::SelectorModel(const SelectorArch& arch, int input_dim, std::uint64_t init_seed)
    : arch_(arch), input_dim_(input_dim) {
  arch_.validate();
  if (input_dim < 1) throw ValidationError("selector input width must be positive");
  if (arch_.variant == SelectorVariant::mlp) {
    dense_.push_back(nnet::Dense::create(params_, "mlp.fc1", input_dim, arch_.hidden));
    dense_.push_back(nnet::Dense::create(params_, "mlp.fc2", arch_.hidden, arch_.hidden));
    dense_.push_back(nnet::Dense::create(params_, "mlp.out", arch_.hidden, 2));
  } else {
    const int ch = arch_.channels;
    dense_.push_back(nnet::Dense::create(params_, "tcn.in", input_dim, ch));
    for (int l = 0; l < arch_.blocks; ++l) {
      const auto prefix = "tcn.block" + std::to_string(l);
      conv_w_.push_back(params_.add(prefix + ".conv.weight", arch_.kernel * ch, ch));
      conv_b_.push_back(params_.add(prefix + ".conv.bias", 1, ch));
      dense_.push_back(nnet::Dense::create(params_, prefix + ".mix", ch, ch));
    }
    dense_.push_back(nnet::Dense::create(params_, "tcn.out", ch, 2));
  }
  Rng rng(init_seed);
  params_.init_glorot(rng);
}

nnet::Tensor2D SelectorModel::logits(const nnet::Tensor2D& x, Cache* cache) const {
  if (x.cols() != input_dim_) {
    throw ShapeError("selector expects " + std::to_string(input_dim_) + " features per frame, got " +
                     std::to_string(x.cols()));
  }
  if (x.rows() < 1) throw ShapeError("selector input has no frames");
  if (cache) {
    cache->input = x;
    cache->acts.clear();
  }
  auto keep = [&](const nnet::Tensor2D& t) {
    if (cache) cache->acts.push_back(t);
  };
  if (arch_.variant == SelectorVariant::mlp) {
    const auto z1 = dense_[0].forward(params_, x);
    const auto h1 = nnet::relu(z1);
    const auto z2 = dense_[1].forward(params_, h1);
    const auto h2 = nnet::relu(z2);
    keep(z1);
    keep(h1);
    keep(z2);
    keep(h2);
    return dense_[2].forward(params_, h2);
  }
  auto a = dense_[0].forward(params_, x);
  keep(a);
  const auto dil = arch_.dilations();
  for (int l = 0; l < arch_.blocks; ++l) {
    const auto li = static_cast<std::size_t>(l);
    const auto c = nnet::conv1d_forward(a, params_.value(conv_w_[li]), params_.value(conv_b_[li]), arch_.kernel, dil[li]);
    const auto r = nnet::relu(c);
    a += dense_[li + 1].forward(params_, r);
    keep(c);
    keep(r);
    keep(a);
  }
  return dense_.back().forward(params_, a);
}

void SelectorModel::backward(const Cache& cache, const nnet::Tensor2D& dlogits) {
  const auto& acts = cache.acts;
  if (arch_.variant == SelectorVariant::mlp) {
    auto dh2 = dense_[2].backward(params_, acts[3], dlogits);
    auto dh1 = dense_[1].backward(params_, acts[1], nnet::relu_backward(acts[2], dh2));
    dense_[0].backward(params_, cache.input, nnet::relu_backward(acts[0], dh1));
    return;
  }
  const auto dil = arch_.dilations();
  const auto blocks = static_cast<std::size_t>(arch_.blocks);
  auto da = dense_.back().backward(params_, acts[3 * blocks], dlogits);
  for (std::size_t l = blocks; l-- > 0;) {
    const auto& a_in = acts[3 * l];
    const auto& c = acts[3 * l + 1];
    const auto& r = acts[3 * l + 2];
    const auto dr = dense_[l + 1].backward(params_, r, da);
    const auto dc = nnet::relu_backward(c, dr);
    da += nnet::conv1d_backward(a_in, params_.value(conv_w_[l]), dc, arch_.kernel, dil[l], params_.grad(conv_w_[l]),
                                params_.grad(conv_b_[l]));
  }
  dense_[0].backward(params_, cache.input, da);
}

GranularityTrack SelectorModel::select(const nnet::Tensor2D& features) const {
  GranularityTrack track;
  track.probabilities = nnet::softmax_rows(logits(features));
  track.selection = select_from_probabilities(track.probabilities);
  return track;
}

}  // namespace islands
