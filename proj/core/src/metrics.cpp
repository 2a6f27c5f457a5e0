/*
 * Copyright 2026 The Islands Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#include "islands/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "islands/error.hpp"
#include "islands/nnet/loss.hpp"

namespace islands {

namespace {

void require_lengths(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw ValidationError(std::string(what) + ": length mismatch (" + std::to_string(a) + " vs " + std::to_string(b) +
                          ")");
  }
}

}  // namespace

WeightedTally& WeightedTally::operator+=(const WeightedTally& o) noexcept {
  frames += o.frames;
  fine_selected += o.fine_selected;
  fine_credited += o.fine_credited;
  coarse_selected += o.coarse_selected;
  coarse_credited += o.coarse_credited;
  return *this;
}

double WeightedTally::weighted(double beta) const {
  if (!(beta > 0.0) || !std::isfinite(beta)) throw ValidationError("beta must be positive and finite");
  if (frames == 0) throw ValidationError("weighted accuracy of an empty track");
  return (static_cast<double>(fine_credited) + beta * static_cast<double>(coarse_credited)) /
         (static_cast<double>(frames) * std::max(1.0, beta));
}

double WeightedTally::fine_accuracy() const noexcept {
  return frames == 0 ? 0.0 : static_cast<double>(fine_credited) / static_cast<double>(frames);
}

double WeightedTally::coarse_accuracy() const noexcept {
  return frames == 0 ? 0.0 : static_cast<double>(coarse_credited) / static_cast<double>(frames);
}

double WeightedTally::fraction_coarse() const noexcept {
  return frames == 0 ? 0.0 : static_cast<double>(coarse_selected) / static_cast<double>(frames);
}

WeightedTally tally_selection(std::span<const int> selection, std::span<const int> fine_argmax,
                              std::span<const int> coarse_argmax, std::span<const int> truth_fine,
                              const Taxonomy& taxonomy) {
  require_lengths(selection.size(), truth_fine.size(), "weighted accuracy");
  require_lengths(fine_argmax.size(), truth_fine.size(), "weighted accuracy");
  require_lengths(coarse_argmax.size(), truth_fine.size(), "weighted accuracy");
  WeightedTally t;
  t.frames = static_cast<long>(truth_fine.size());
  for (std::size_t i = 0; i < truth_fine.size(); ++i) {
    if (selection[i] == 0) {
      ++t.fine_selected;
      if (fine_argmax[i] == truth_fine[i]) ++t.fine_credited;
    } else if (selection[i] == 1) {
      ++t.coarse_selected;
      if (coarse_argmax[i] == taxonomy.coarsen(truth_fine[i])) ++t.coarse_credited;
    } else {
      throw ValidationError("selection entries must be 0 (fine) or 1 (coarse)");
    }
  }
  return t;
}

double weighted_accuracy(std::span<const int> selection, std::span<const int> fine_argmax,
                         std::span<const int> coarse_argmax, std::span<const int> truth_fine,
                         const Taxonomy& taxonomy, double beta) {
  if (!(beta > 0.0) || !std::isfinite(beta)) throw ValidationError("beta must be positive and finite");
  return tally_selection(selection, fine_argmax, coarse_argmax, truth_fine, taxonomy).weighted(beta);
}

double moc_accuracy(std::span<const int> predicted, std::span<const int> truth, const Taxonomy& taxonomy) {
  require_lengths(predicted.size(), truth.size(), "moc_accuracy");
  if (truth.empty()) throw ValidationError("moc_accuracy: empty track");
  const auto classes = static_cast<std::size_t>(taxonomy.fine_count());
  std::vector<long> total(classes, 0), hit(classes, 0);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 0 || static_cast<std::size_t>(truth[i]) >= classes) throw ValidationError("moc_accuracy: label out of range");
    ++total[static_cast<std::size_t>(truth[i])];
    if (predicted[i] == truth[i]) ++hit[static_cast<std::size_t>(truth[i])];
  }
  double sum = 0.0;
  int present = 0;
  for (std::size_t c = 0; c < classes; ++c) {
    if (total[c] == 0) continue;
    sum += static_cast<double>(hit[c]) / static_cast<double>(total[c]);
    ++present;
  }
  return sum / present;
}

std::vector<double> frame_nll(const nnet::Tensor2D& probabilities, std::span<const int> truth) {
  require_lengths(static_cast<std::size_t>(probabilities.rows()), truth.size(), "nll");
  std::vector<double> out(truth.size());
  for (std::size_t t = 0; t < truth.size(); ++t) {
    if (truth[t] < 0 || truth[t] >= probabilities.cols()) throw ValidationError("nll: label out of range");
    out[t] = nnet::floored_nll(probabilities(static_cast<int>(t), truth[t]));
  }
  return out;
}

double nll(const nnet::Tensor2D& probabilities, std::span<const int> truth) {
  if (truth.empty()) throw ValidationError("nll: empty track");
  const auto per_frame = frame_nll(probabilities, truth);
  double sum = 0.0;
  for (double v : per_frame) sum += v;
  return sum / static_cast<double>(per_frame.size());
}

nnet::Tensor2D interpolate_to_length(const nnet::Tensor2D& track, int length) {
  if (track.rows() < 1) throw ValidationError("interpolate_to_length: empty track");
  if (length < track.rows()) throw ValidationError("interpolate_to_length: target shorter than the track");
  if (length == track.rows()) return track;
  const int n = track.rows();
  nnet::Tensor2D out(length, track.cols());
  for (int j = 0; j < length; ++j) {
    const double s = length == 1 ? 0.0 : static_cast<double>(j) * (n - 1) / (length - 1);
    const int lo = std::min(static_cast<int>(std::floor(s)), n - 1);
    const int hi = std::min(lo + 1, n - 1);
    const double w = s - lo;
    double sum = 0.0;
    for (int c = 0; c < track.cols(); ++c) {
      const double v = (1.0 - w) * track(lo, c) + w * track(hi, c);
      out(j, c) = v;
      sum += v;
    }
    if (sum > 0.0) {
      for (int c = 0; c < track.cols(); ++c) out(j, c) /= sum;
    }
  }
  return out;
}

nnet::Tensor2D one_hot_track(std::span<const int> labels, int num_classes) {
  nnet::Tensor2D out(static_cast<int>(labels.size()), num_classes);
  for (std::size_t t = 0; t < labels.size(); ++t) {
    if (labels[t] < 0 || labels[t] >= num_classes) throw ValidationError("one_hot_track: label out of range");
    out(static_cast<int>(t), labels[t]) = 1.0;
  }
  return out;
}

double mse_nll(std::span<const nnet::Tensor2D> predicted, std::span<const nnet::Tensor2D> truth) {
  if (predicted.empty() || truth.empty()) throw ValidationError("mse_nll: empty corpus");
  require_lengths(predicted.size(), truth.size(), "mse_nll");
  int longest = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (predicted[i].rows() != truth[i].rows() || predicted[i].cols() != truth[i].cols()) {
      throw ShapeError("mse_nll: prediction and truth shapes differ for video " + std::to_string(i));
    }
    longest = std::max(longest, predicted[i].rows());
  }
  double total = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const auto p = interpolate_to_length(predicted[i], longest);
    const auto q = interpolate_to_length(truth[i], longest);
    double video = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
      const double d = p.values()[k] - q.values()[k];
      video += d * d;
    }
    total += video / longest;
  }
  return total / static_cast<double>(predicted.size());
}

}  // namespace islands
