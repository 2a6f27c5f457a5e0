/*
 * Copyright 2026 The Islands Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#include "islands/nnet/gru.hpp"

#include <cmath>

#include "islands/error.hpp"
#include "islands/nnet/layers.hpp"

namespace islands::nnet {

GruCell GruCell::create(ParamStore& store, const std::string& prefix, int input, int hidden) {
  GruCell c;
  c.input = input;
  c.hidden = hidden;
  c.wz = store.add(prefix + ".wz", input, hidden);
  c.uz = store.add(prefix + ".uz", hidden, hidden);
  c.bz = store.add(prefix + ".bz", 1, hidden);
  c.wr = store.add(prefix + ".wr", input, hidden);
  c.ur = store.add(prefix + ".ur", hidden, hidden);
  c.br = store.add(prefix + ".br", 1, hidden);
  c.wh = store.add(prefix + ".wh", input, hidden);
  c.uh = store.add(prefix + ".uh", hidden, hidden);
  c.bh = store.add(prefix + ".bh", 1, hidden);
  return c;
}

namespace {

// a W + b U + bias, row-broadcast.
Tensor2D affine2(const Tensor2D& a, const Tensor2D& w, const Tensor2D& b, const Tensor2D& u, const Tensor2D& bias) {
  Tensor2D y = dense_forward(a, w, bias);
  y += matmul(b, u);
  return y;
}

}  // namespace

Tensor2D gru_step(const ParamStore& store, const GruCell& cell, const Tensor2D& h_prev, const Tensor2D& x,
                  GruCache* cache) {
  if (x.cols() != cell.input || h_prev.cols() != cell.hidden || x.rows() != h_prev.rows()) {
    throw ShapeError("gru step: x " + x.shape_string() + ", h " + h_prev.shape_string() + " for cell " +
                     std::to_string(cell.input) + "->" + std::to_string(cell.hidden));
  }
  Tensor2D z = sigmoid(affine2(x, store.value(cell.wz), h_prev, store.value(cell.uz), store.value(cell.bz)));
  Tensor2D r = sigmoid(affine2(x, store.value(cell.wr), h_prev, store.value(cell.ur), store.value(cell.br)));
  Tensor2D rh = hadamard(r, h_prev);
  Tensor2D h_tilde = tanh(affine2(x, store.value(cell.wh), rh, store.value(cell.uh), store.value(cell.bh)));
  Tensor2D h(h_prev.rows(), h_prev.cols());
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double zi = z.values()[i];
    h.values()[i] = (1.0 - zi) * h_prev.values()[i] + zi * h_tilde.values()[i];
  }
  if (cache) {
    cache->x = x;
    cache->h_prev = h_prev;
    cache->z = std::move(z);
    cache->r = std::move(r);
    cache->h_tilde = std::move(h_tilde);
    cache->rh = std::move(rh);
  }
  return h;
}

Tensor2D gru_step_backward(ParamStore& store, const GruCell& cell, const GruCache& c, const Tensor2D& dh,
                           Tensor2D* dx) {
  require_same_shape(dh, c.h_prev, "gru backward dh");
  const std::size_t n = dh.size();
  Tensor2D dh_prev(dh.rows(), dh.cols());
  Tensor2D da_h(dh.rows(), dh.cols());
  Tensor2D da_z(dh.rows(), dh.cols());
  for (std::size_t i = 0; i < n; ++i) {
    const double g = dh.values()[i];
    const double z = c.z.values()[i];
    const double ht = c.h_tilde.values()[i];
    dh_prev.values()[i] = g * (1.0 - z);
    da_h.values()[i] = g * z * (1.0 - ht * ht);
    da_z.values()[i] = g * (ht - c.h_prev.values()[i]) * z * (1.0 - z);
  }

  // Candidate branch.
  Tensor2D dx_acc = dense_backward(c.x, store.value(cell.wh), da_h, store[cell.wh].grad, store[cell.bh].grad);
  matmul_tn(c.rh, da_h, store[cell.uh].grad, true);
  const Tensor2D d_rh = matmul_nt(da_h, store.value(cell.uh));
  Tensor2D da_r(dh.rows(), dh.cols());
  for (std::size_t i = 0; i < n; ++i) {
    const double r = c.r.values()[i];
    dh_prev.values()[i] += d_rh.values()[i] * r;
    da_r.values()[i] = d_rh.values()[i] * c.h_prev.values()[i] * r * (1.0 - r);
  }

  // Update and reset gates.
  dx_acc += dense_backward(c.x, store.value(cell.wz), da_z, store[cell.wz].grad, store[cell.bz].grad);
  matmul_tn(c.h_prev, da_z, store[cell.uz].grad, true);
  dh_prev += matmul_nt(da_z, store.value(cell.uz));
  dx_acc += dense_backward(c.x, store.value(cell.wr), da_r, store[cell.wr].grad, store[cell.br].grad);
  matmul_tn(c.h_prev, da_r, store[cell.ur].grad, true);
  dh_prev += matmul_nt(da_r, store.value(cell.ur));

  if (dx) *dx = std::move(dx_acc);
  return dh_prev;
}

}  // namespace islands::nnet
