/*
 * Copyright 2026 The Islands Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "islands/random.hpp"
#include "islands/sequence.hpp"
#include "islands/taxonomy.hpp"

namespace islands {

struct GrammarTransition {
  int target = 0;
  double probability = 0.0;
};

/// A grammar state: emits one fine label from `emissions` (weighted), holds it
/// for a uniform number of frames in [min_frames, max_frames], then moves on.
struct GrammarNode {
  std::string name;
  std::vector<int> emissions;
  std::vector<double> emission_weights;  // same length as emissions; normalised
  int min_frames = 1;
  int max_frames = 1;
  std::vector<GrammarTransition> transitions;  // empty iff terminal
  bool terminal = false;
  /// Free-form tag ("middle", "tail", ...) used by reports to group frames.
  std::string region;
};

/// Probabilistic activity grammar used to synthesise corpora.
struct GrammarSpec {
  std::vector<GrammarNode> nodes;
  int entry = 0;
  /// Standard deviation of the Gaussian noise added to one-hot features.
  double feature_noise = 0.3;

  /// Throws ValidationError: unnormalised transitions, bad durations, unknown
  /// labels, or a node reachable from the entry that cannot reach a terminal.
  void validate(const Taxonomy& taxonomy) const;
  int find_node(std::string_view name) const noexcept;
  /// Fine labels emitted by nodes carrying `region`.
  std::vector<int> region_labels(std::string_view region) const;
};

/// One step of a grammar walk.
struct GrammarStep {
  int node = 0;
  int action = 0;
  int length = 1;
};

/// Walks the grammar from the entry to a terminal.
std::vector<GrammarStep> sample_walk(const GrammarSpec& spec, Rng& rng);

/// JSON grammar document; label names resolve against `taxonomy`.
GrammarSpec parse_grammar(std::string_view json_text, const Taxonomy& taxonomy);
GrammarSpec load_grammar(const std::filesystem::path& path, const Taxonomy& taxonomy);

/// Samples `count` videos ("video_0000", ...). Features are one-hot fine labels
/// plus N(0, feature_noise^2) noise. Deterministic in (spec, count, seed).
Corpus generate_corpus(const GrammarSpec& spec, int count, std::uint64_t seed, const Taxonomy& taxonomy);

}  // namespace islands
