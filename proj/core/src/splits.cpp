/*
 * Copyright 2026 The Islands Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#include "islands/splits.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "islands/error.hpp"
#include "islands/random.hpp"

namespace islands {

std::vector<Fold> make_splits(int corpus_size, int folds, std::uint64_t seed, double validation_fraction) {
  if (folds < 2) throw ValidationError("fold count must be at least 2");
  if (corpus_size < folds) {
    throw ValidationError("corpus of " + std::to_string(corpus_size) + " videos is too small for " +
                          std::to_string(folds) + " folds");
  }
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
    throw ValidationError("validation fraction must lie in [0, 1)");
  }
  std::vector<int> order(static_cast<std::size_t>(corpus_size));
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<Fold> result(static_cast<std::size_t>(folds));
  const int base = corpus_size / folds;
  const int extra = corpus_size % folds;
  int cursor = 0;
  for (int f = 0; f < folds; ++f) {
    const int size = base + (f < extra ? 1 : 0);
    auto& fold = result[static_cast<std::size_t>(f)];
    fold.test.assign(order.begin() + cursor, order.begin() + cursor + size);
    cursor += size;
  }
  for (int f = 0; f < folds; ++f) {
    auto& fold = result[static_cast<std::size_t>(f)];
    std::vector<int> rest;
    for (int g = 0; g < folds; ++g) {
      if (g == f) continue;
      const auto& t = result[static_cast<std::size_t>(g)].test;
      rest.insert(rest.end(), t.begin(), t.end());
    }
    std::sort(rest.begin(), rest.end());
    Rng fold_rng(derive_seed(seed, static_cast<std::uint64_t>(f)));
    std::shuffle(rest.begin(), rest.end(), fold_rng);
    int n_val = static_cast<int>(std::lround(validation_fraction * static_cast<double>(rest.size())));
    if (validation_fraction > 0.0) n_val = std::max(n_val, 1);
    n_val = std::min(n_val, static_cast<int>(rest.size()) - 1);
    fold.validation.assign(rest.begin(), rest.begin() + n_val);
    fold.train.assign(rest.begin() + n_val, rest.end());
    std::sort(fold.validation.begin(), fold.validation.end());
    std::sort(fold.train.begin(), fold.train.end());
    std::sort(fold.test.begin(), fold.test.end());
  }
  return result;
}

}  // namespace islands
