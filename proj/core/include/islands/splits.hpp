/*
 * Copyright 2026 The Islands Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <cstdint>
#include <vector>

namespace islands {

/// Corpus indices for one cross-validation fold.
struct Fold {
  std::vector<int> train;
  std::vector<int> validation;
  std::vector<int> test;
};

/// k-fold partition of `corpus_size` items. Test folds are disjoint, cover the
/// corpus and differ in size by at most one. A validation subset of
/// round(validation_fraction * |train|) items (at least one when the fraction
/// is positive) is carved out of each training remainder. Deterministic in seed.
std::vector<Fold> make_splits(int corpus_size, int folds, std::uint64_t seed, double validation_fraction = 0.15);

}  // namespace islands
