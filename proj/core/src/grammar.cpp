/*
 * Copyright 2026 The Islands Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#include "islands/grammar.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include <nlohmann/json.hpp>

#include "io_util.hpp"
#include "islands/error.hpp"

namespace islands {

namespace {

constexpr std::size_t kMaxWalkSteps = 100000;

int sample_index(std::span<const double> weights, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double r = u(rng);
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    acc += weights[i];
    if (r < acc) return static_cast<int>(i);
  }
  // r landed in the rounding gap at the top; take the last positive weight.
  for (std::size_t i = weights.size(); i-- > 0;) {
    if (weights[i] > 0.0) return static_cast<int>(i);
  }
  return 0;
}

}  // namespace

int GrammarSpec::find_node(std::string_view name) const noexcept {
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

std::vector<int> GrammarSpec::region_labels(std::string_view region) const {
  std::vector<int> labels;
  for (const auto& n : nodes) {
    if (n.region != region) continue;
    for (int e : n.emissions) {
      if (std::find(labels.begin(), labels.end(), e) == labels.end()) labels.push_back(e);
    }
  }
  std::sort(labels.begin(), labels.end());
  return labels;
}

void GrammarSpec::validate(const Taxonomy& taxonomy) const {
  if (nodes.empty()) throw ValidationError("grammar has no nodes");
  const int n = static_cast<int>(nodes.size());
  if (entry < 0 || entry >= n) throw ValidationError("grammar entry node out of range");
  if (!(feature_noise >= 0.0) || !std::isfinite(feature_noise)) {
    throw ValidationError("grammar feature_noise must be finite and non-negative");
  }
  for (const auto& node : nodes) {
    const std::string where = "grammar node '" + node.name + "': ";
    if (node.emissions.empty()) throw ValidationError(where + "empty emission set");
    if (node.emission_weights.size() != node.emissions.size()) {
      throw ValidationError(where + "emission weights do not match emissions");
    }
    double wsum = 0.0;
    for (std::size_t i = 0; i < node.emissions.size(); ++i) {
      if (node.emissions[i] < 0 || node.emissions[i] >= taxonomy.fine_count()) {
        throw ValidationError(where + "emission label index out of range");
      }
      if (!(node.emission_weights[i] >= 0.0)) throw ValidationError(where + "negative emission weight");
      wsum += node.emission_weights[i];
    }
    if (std::abs(wsum - 1.0) > 1e-9) throw ValidationError(where + "emission weights do not sum to 1");
    if (node.min_frames < 1 || node.max_frames < node.min_frames) {
      throw ValidationError(where + "duration range must satisfy 1 <= min <= max");
    }
    if (node.terminal) {
      if (!node.transitions.empty()) throw ValidationError(where + "terminal node has transitions");
      continue;
    }
    if (node.transitions.empty()) throw ValidationError(where + "non-terminal node has no transitions");
    double psum = 0.0;
    for (const auto& t : node.transitions) {
      if (t.target < 0 || t.target >= n) throw ValidationError(where + "transition target out of range");
      if (!(t.probability >= 0.0)) throw ValidationError(where + "negative transition probability");
      psum += t.probability;
    }
    if (std::abs(psum - 1.0) > 1e-9) {
      throw ValidationError(where + "transition probabilities sum to " + std::to_string(psum) + ", not 1");
    }
  }

  // Absorption with probability 1: every node reachable from the entry must
  // itself reach a terminal along positive-probability edges.
  std::vector<bool> reachable(nodes.size(), false);
  std::vector<int> stack{entry};
  reachable[static_cast<std::size_t>(entry)] = true;
  while (!stack.empty()) {
    const int cur = stack.back();
    stack.pop_back();
    for (const auto& t : nodes[static_cast<std::size_t>(cur)].transitions) {
      if (t.probability > 0.0 && !reachable[static_cast<std::size_t>(t.target)]) {
        reachable[static_cast<std::size_t>(t.target)] = true;
        stack.push_back(t.target);
      }
    }
  }
  std::vector<bool> reaches_terminal(nodes.size(), false);
  for (std::size_t i = 0; i < nodes.size(); ++i) reaches_terminal[i] = nodes[i].terminal;
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (reaches_terminal[i]) continue;
      for (const auto& t : nodes[i].transitions) {
        if (t.probability > 0.0 && reaches_terminal[static_cast<std::size_t>(t.target)]) {
          reaches_terminal[i] = true;
          changed = true;
          break;
        }
      }
    }
  }
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (reachable[i] && !reaches_terminal[i]) {
      throw ValidationError("grammar node '" + nodes[i].name + "' cannot reach a terminal node");
    }
  }
}

std::vector<GrammarStep> sample_walk(const GrammarSpec& spec, Rng& rng) {
  std::vector<GrammarStep> walk;
  int cur = spec.entry;
  for (std::size_t step = 0; step < kMaxWalkSteps; ++step) {
    const auto& node = spec.nodes[static_cast<std::size_t>(cur)];
    GrammarStep s;
    s.node = cur;
    s.action = node.emissions[static_cast<std::size_t>(sample_index(node.emission_weights, rng))];
    std::uniform_int_distribution<int> dur(node.min_frames, node.max_frames);
    s.length = dur(rng);
    walk.push_back(s);
    if (node.terminal) return walk;
    std::vector<double> probs;
    probs.reserve(node.transitions.size());
    for (const auto& t : node.transitions) probs.push_back(t.probability);
    cur = node.transitions[static_cast<std::size_t>(sample_index(probs, rng))].target;
  }
  throw ValidationError("grammar walk exceeded " + std::to_string(kMaxWalkSteps) + " steps");
}

GrammarSpec parse_grammar(std::string_view json_text, const Taxonomy& taxonomy) {
  nlohmann::ordered_json doc;
  try {
    doc = nlohmann::ordered_json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("grammar: ") + e.what());
  }
  GrammarSpec spec;
  try {
    const auto& nodes = doc.at("nodes");
    if (!nodes.is_array()) throw ParseError("grammar: 'nodes' must be an array");
    for (const auto& jn : nodes) {
      GrammarNode node;
      node.name = jn.at("name").get<std::string>();
      if (spec.find_node(node.name) >= 0) throw ValidationError("grammar: duplicate node '" + node.name + "'");
      for (const auto& label : jn.at("emit")) {
        const auto name = label.get<std::string>();
        const int idx = taxonomy.find_fine(name);
        if (idx < 0) throw ValidationError("grammar node '" + node.name + "': unknown label '" + name + "'");
        node.emissions.push_back(idx);
      }
      if (jn.contains("emit_weights")) {
        node.emission_weights = jn.at("emit_weights").get<std::vector<double>>();
      } else {
        node.emission_weights.assign(node.emissions.size(),
                                     node.emissions.empty() ? 0.0 : 1.0 / static_cast<double>(node.emissions.size()));
      }
      const auto& dur = jn.at("duration");
      if (!dur.is_array() || dur.size() != 2) throw ParseError("grammar node '" + node.name + "': duration must be [min, max]");
      node.min_frames = dur[0].get<int>();
      node.max_frames = dur[1].get<int>();
      node.terminal = jn.value("terminal", false);
      node.region = jn.value("region", std::string{});
      spec.nodes.push_back(std::move(node));
    }
    // Second pass: transitions may point forward.
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const auto& jn = nodes[i];
      if (!jn.contains("next")) continue;
      for (const auto& [target, p] : jn.at("next").items()) {
        const int t = spec.find_node(target);
        if (t < 0) {
          throw ValidationError("grammar node '" + spec.nodes[i].name + "': unknown transition target '" + target + "'");
        }
        spec.nodes[i].transitions.push_back({t, p.get<double>()});
      }
    }
    const auto entry = doc.at("entry").get<std::string>();
    spec.entry = spec.find_node(entry);
    if (spec.entry < 0) throw ValidationError("grammar: unknown entry node '" + entry + "'");
    spec.feature_noise = doc.value("feature_noise", 0.3);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("grammar: ") + e.what());
  }
  spec.validate(taxonomy);
  return spec;
}

GrammarSpec load_grammar(const std::filesystem::path& path, const Taxonomy& taxonomy) {
  try {
    return parse_grammar(detail::read_text_file(path), taxonomy);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

Corpus generate_corpus(const GrammarSpec& spec, int count, std::uint64_t seed, const Taxonomy& taxonomy) {
  if (count < 1) throw ValidationError("corpus size must be at least 1");
  spec.validate(taxonomy);
  Rng rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  Corpus corpus;
  corpus.reserve(static_cast<std::size_t>(count));
  for (int v = 0; v < count; ++v) {
    const auto walk = sample_walk(spec, rng);
    std::vector<int> frames;
    for (const auto& s : walk) frames.insert(frames.end(), static_cast<std::size_t>(s.length), s.action);
    nnet::Tensor2D features(static_cast<int>(frames.size()), taxonomy.fine_count());
    for (int t = 0; t < features.rows(); ++t) {
      for (int c = 0; c < features.cols(); ++c) {
        features(t, c) = (c == frames[static_cast<std::size_t>(t)] ? 1.0 : 0.0) + spec.feature_noise * noise(rng);
      }
    }
    char id[32];
    std::snprintf(id, sizeof id, "video_%04d", v);
    corpus.push_back(VideoSequence::from_frames(id, std::move(frames), taxonomy, std::move(features)));
  }
  return corpus;
}

}  // namespace islands
