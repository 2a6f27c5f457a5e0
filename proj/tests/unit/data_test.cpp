/*
 * Copyright 2026 The Islands Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#include <gtest/gtest.h>

#include <fstream>
#include <map>
#include <set>

#include "islands/annotations.hpp"
#include "islands/error.hpp"
#include "islands/grammar.hpp"
#include "islands/sequence.hpp"
#include "islands/splits.hpp"
#include "test_support.hpp"

namespace islands {
namespace {

Taxonomy salad_taxonomy() { return load_mapping(testing::config_dir() / "salad_taxonomy.tsv"); }
GrammarSpec salad_grammar(const Taxonomy& tax) {
  return load_grammar(testing::config_dir() / "salad_grammar.json", tax);
}

void check_invariants(const VideoSequence& v, const Taxonomy& tax) {
  EXPECT_EQ(segments_to_frames(v.segments()), v.frames_fine());
  EXPECT_EQ(tax.coarsen(v.frames_fine()), v.frames_coarse());
  if (v.features()) {
    EXPECT_EQ(v.features()->rows(), v.length());
  }
}

// ---- generation -------------------------------------------------------------

TEST(Grammar, SameSeedGivesIdenticalCorpus) {
  const auto tax = salad_taxonomy();
  const auto spec = salad_grammar(tax);
  EXPECT_EQ(generate_corpus(spec, 25, 99, tax), generate_corpus(spec, 25, 99, tax));
  EXPECT_NE(generate_corpus(spec, 25, 99, tax), generate_corpus(spec, 25, 100, tax));
}

TEST(Grammar, SingleNodeGrammarGivesOneSegment) {
  const auto tax = salad_taxonomy();
  const auto spec = parse_grammar(
      R"({"entry": "n", "nodes": [{"name": "n", "emit": ["cut_tomato"], "duration": [10, 10], "terminal": true}]})",
      tax);
  for (const auto& v : generate_corpus(spec, 12, 1, tax)) {
    ASSERT_EQ(v.segments().size(), 1u);
    EXPECT_EQ(v.segments()[0], (Segment{0, 10}));
  }
}

TEST(Grammar, ShippedGrammarAlwaysEndsInTail) {
  const auto tax = salad_taxonomy();
  const auto spec = salad_grammar(tax);
  const int serve = tax.find_fine("serve_salad");
  const auto corpus = generate_corpus(spec, 200, 2024, tax);
  int ending = 0;
  for (const auto& v : corpus) {
    check_invariants(v, tax);
    ending += v.frames_fine().back() == serve ? 1 : 0;
  }
  EXPECT_EQ(static_cast<double>(ending) / corpus.size(), 1.0);
}

TEST(Grammar, FeaturesAreNoisyOneHot) {
  const auto tax = salad_taxonomy();
  const auto spec = salad_grammar(tax);
  const auto corpus = generate_corpus(spec, 20, 3, tax);
  double sum = 0.0, sq = 0.0;
  long n = 0;
  for (const auto& v : corpus) {
    ASSERT_TRUE(v.features().has_value());
    ASSERT_EQ(v.features()->cols(), tax.fine_count());
    for (int t = 0; t < v.length(); ++t)
      for (int c = 0; c < tax.fine_count(); ++c) {
        const double noise = (*v.features())(t, c) - (c == v.frames_fine()[t] ? 1.0 : 0.0);
        sum += noise;
        sq += noise * noise;
        ++n;
      }
  }
  EXPECT_NEAR(sum / n, 0.0, 0.01);
  EXPECT_NEAR(std::sqrt(sq / n), spec.feature_noise, 0.01);
}

TEST(Grammar, TransitionFrequenciesMatchGrammar) {
  const auto tax = salad_taxonomy();
  const auto spec = salad_grammar(tax);
  std::map<std::pair<int, int>, long> edges;
  std::map<int, long> visits;
  Rng rng(77);
  for (int i = 0; i < 10000; ++i) {
    const auto walk = sample_walk(spec, rng);
    for (std::size_t k = 0; k + 1 < walk.size(); ++k) {
      ++edges[{walk[k].node, walk[k + 1].node}];
      ++visits[walk[k].node];
    }
  }
  for (std::size_t n = 0; n < spec.nodes.size(); ++n) {
    for (const auto& tr : spec.nodes[n].transitions) {
      const double freq = static_cast<double>(edges[{static_cast<int>(n), tr.target}]) /
                          static_cast<double>(visits[static_cast<int>(n)]);
      EXPECT_NEAR(freq, tr.probability, 0.03) << spec.nodes[n].name;
    }
  }
}

TEST(Grammar, UnnormalisedTransitionsRejected) {
  const auto tax = salad_taxonomy();
  EXPECT_THROW(parse_grammar(R"({"entry": "a", "nodes": [
      {"name": "a", "emit": ["cut_tomato"], "duration": [1, 2], "next": {"b": 0.6}},
      {"name": "b", "emit": ["serve_salad"], "duration": [1, 2], "terminal": true}]})",
                             tax),
               ValidationError);
}

TEST(Grammar, UnreachableTerminalRejected) {
  const auto tax = salad_taxonomy();
  EXPECT_THROW(parse_grammar(R"({"entry": "a", "nodes": [
      {"name": "a", "emit": ["cut_tomato"], "duration": [1, 2], "next": {"b": 1.0}},
      {"name": "b", "emit": ["cut_onion"], "duration": [1, 2], "next": {"a": 1.0}},
      {"name": "c", "emit": ["serve_salad"], "duration": [1, 2], "terminal": true}]})",
                             tax),
               ValidationError);
}

// ---- annotations --------------------------------------------------------------

TEST(Annotations, RunLengthEncodesFrames) {
  const auto tax = testing::small_taxonomy();
  const auto v = parse_annotation("vid", "a0\na0\nb1\n", tax);
  EXPECT_EQ(v.length(), 3);
  EXPECT_EQ(v.segments(), (std::vector<Segment>{{0, 2}, {4, 1}}));
  EXPECT_FALSE(v.features().has_value());
}

TEST(Annotations, UnknownLabelNamesLabelAndLine) {
  const auto tax = testing::small_taxonomy();
  try {
    parse_annotation("vid", "a0\nzz\n", tax);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("zz"), std::string::npos);
    EXPECT_NE(msg.find(":2"), std::string::npos);
  }
}

TEST(Annotations, EmptyFileRejected) {
  EXPECT_THROW(parse_annotation("vid", "", testing::small_taxonomy()), ValidationError);
}

TEST(Annotations, DirectoryRoundTrip) {
  const auto tax = salad_taxonomy();
  const auto corpus = generate_corpus(salad_grammar(tax), 8, 4, tax);
  const auto dir = testing::scratch_dir("annotations");
  save_annotations(dir, corpus, tax);
  const auto back = load_annotations(dir, tax);
  ASSERT_EQ(back.size(), corpus.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].id(), corpus[i].id());
    EXPECT_EQ(back[i].frames_fine(), corpus[i].frames_fine());
    check_invariants(back[i], tax);
  }
  const auto dir2 = testing::scratch_dir("annotations2");
  save_annotations(dir2, back, tax);
  for (const auto& v : corpus) {
    std::ifstream a(dir / (v.id() + ".txt")), b(dir2 / (v.id() + ".txt"));
    std::string sa((std::istreambuf_iterator<char>(a)), {}), sb((std::istreambuf_iterator<char>(b)), {});
    EXPECT_EQ(sa, sb);
  }
}

TEST(Annotations, ManifestListsEveryVideo) {
  const auto tax = salad_taxonomy();
  const auto corpus = generate_corpus(salad_grammar(tax), 5, 4, tax);
  const auto text = corpus_manifest(corpus);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 5);
  EXPECT_NE(text.find("\"video_0000\""), std::string::npos);
}

// ---- observation split ----------------------------------------------------------

TEST(ObservationSplit, TwentyPercentHalfRemainder) {
  const auto s = split_observation(100, 0.2, 0.5);
  EXPECT_EQ(s.observed, 20);
  EXPECT_EQ(s.future_begin() + 1, 21);  // 1-based first future frame
  EXPECT_EQ(s.future_end(), 60);
}

TEST(ObservationSplit, FullRemainder) {
  const auto s = split_observation(100, 0.3, 1.0);
  EXPECT_EQ(s.observed, 30);
  EXPECT_EQ(s.horizon, 70);
  EXPECT_EQ(s.future_end(), 100);
}

TEST(ObservationSplit, TooShortRejected) {
  EXPECT_THROW(split_observation(10, 0.05, 0.5), ValidationError);
  EXPECT_THROW(split_observation(10, 0.0, 0.5), ValidationError);
  EXPECT_THROW(split_observation(10, 0.5, 1.5), ValidationError);
}

// ---- segments <-> frames -----------------------------------------------------------

TEST(Segments, RoundTrip) {
  const std::vector<Segment> segs{{0, 2}, {1, 1}};
  const auto frames = segments_to_frames(segs);
  EXPECT_EQ(frames, (std::vector<int>{0, 0, 1}));
  EXPECT_EQ(frames_to_segments(frames), segs);
}

TEST(Segments, SingleFrame) {
  const std::vector<int> f{3};
  EXPECT_EQ(frames_to_segments(f), (std::vector<Segment>{{3, 1}}));
}

TEST(Segments, EmptyInputRejected) {
  EXPECT_THROW(frames_to_segments(std::vector<int>{}), ValidationError);
  EXPECT_THROW(segments_to_frames(std::vector<Segment>{}), ValidationError);
}

TEST(Segments, RandomTracksRoundTrip) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed);
    std::uniform_int_distribution<int> label(0, 3), stay(0, 4);
    std::vector<int> frames{label(rng)};
    while (frames.size() < 500) frames.push_back(stay(rng) ? frames.back() : label(rng));
    EXPECT_EQ(segments_to_frames(frames_to_segments(frames)), frames);
  }
}

// ---- splits -------------------------------------------------------------------------

TEST(Splits, FiftyVideosFiveFolds) {
  for (const auto& f : make_splits(50, 5, 1)) EXPECT_EQ(f.test.size(), 10u);
}

TEST(Splits, PartitionContract) {
  const auto folds = make_splits(53, 5, 8, 0.2);
  std::multiset<int> tests;
  for (const auto& f : folds) {
    tests.insert(f.test.begin(), f.test.end());
    std::set<int> train(f.train.begin(), f.train.end()), val(f.validation.begin(), f.validation.end());
    for (int i : f.test) {
      EXPECT_FALSE(train.count(i));
      EXPECT_FALSE(val.count(i));
    }
    for (int i : f.validation) EXPECT_FALSE(train.count(i));
    EXPECT_EQ(f.train.size() + f.validation.size() + f.test.size(), 53u);
  }
  EXPECT_EQ(tests.size(), 53u);
  EXPECT_EQ(std::set<int>(tests.begin(), tests.end()).size(), 53u);
  std::size_t lo = 1000, hi = 0;
  for (const auto& f : folds) lo = std::min(lo, f.test.size()), hi = std::max(hi, f.test.size());
  EXPECT_LE(hi - lo, 1u);
}

TEST(Splits, DeterministicInSeed) {
  const auto a = make_splits(40, 4, 3), b = make_splits(40, 4, 3);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].test, b[i].test);
    EXPECT_EQ(a[i].validation, b[i].validation);
  }
}

TEST(Splits, DefaultValidationFraction) {
  const auto folds = make_splits(100, 5, 3);
  EXPECT_EQ(folds[0].validation.size(), 12u);  // round(0.15 * 80)
}

TEST(Splits, TooSmallCorpusRejected) {
  EXPECT_THROW(make_splits(3, 5, 1), ValidationError);
  EXPECT_THROW(make_splits(10, 1, 1), ValidationError);
}

}  // namespace
}  // namespace islands
