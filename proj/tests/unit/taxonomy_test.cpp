/*
 * Copyright 2026 The Islands Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#include <gtest/gtest.h>

#include "islands/error.hpp"
#include "islands/grammar.hpp"
#include "islands/sequence.hpp"
#include "islands/taxonomy.hpp"
#include "test_support.hpp"

namespace islands {
namespace {

TEST(Taxonomy, ParsesFourFineTwoCoarse) {
  const auto tax = parse_mapping("# comment\nw\tX\nx\tX\ny\tY\nz\tY\n");
  EXPECT_EQ(tax.fine_count(), 4);
  EXPECT_EQ(tax.coarse_count(), 2);
  EXPECT_EQ(tax.coarse_labels(), (std::vector<std::string>{"X", "Y"}));
  EXPECT_EQ(tax.map(), (std::vector<int>{0, 0, 1, 1}));
}

TEST(Taxonomy, CoarseOrderIsFirstAppearance) {
  const auto tax = parse_mapping("p\tQ\nq\tP\nr\tQ\n");
  EXPECT_EQ(tax.coarse_labels(), (std::vector<std::string>{"Q", "P"}));
  EXPECT_EQ(tax.coarsen(1), 1);
}

TEST(Taxonomy, DuplicateFineLabelIsRejected) {
  EXPECT_THROW(parse_mapping("a\tX\nb\tY\na\tY\n"), ValidationError);
  EXPECT_THROW(parse_mapping("a\tX\nb\tY\na\tX\n"), ValidationError);
}

TEST(Taxonomy, MalformedLineIsParseError) {
  EXPECT_THROW(parse_mapping("a X\nb\tY\n"), ParseError);
  EXPECT_THROW(parse_mapping("a\t\nb\tY\n"), ParseError);
}

TEST(Taxonomy, TooFewCoarseLabelsRejected) { EXPECT_THROW(parse_mapping("a\tX\nb\tX\n"), ValidationError); }

TEST(Taxonomy, SeventeenFineFiveCoarse) {
  const char* text =
      "cut_tomato\tprepare\ncut_cheese\tprepare\ncut_lettuce\tprepare\npeel_cucumber\tprepare\n"
      "cut_cucumber\tprepare\nplace_tomato_into_bowl\tplace\nplace_cheese_into_bowl\tplace\n"
      "place_lettuce_into_bowl\tplace\nplace_cucumber_into_bowl\tplace\nadd_oil\tdress\nadd_vinegar\tdress\n"
      "add_salt\tdress\nadd_pepper\tdress\nmix_dressing\tdress\nmix_ingredients\tmix\nadd_dressing\tmix\n"
      "serve_salad_onto_plate\tserve\n";
  const auto tax = parse_mapping(text);
  EXPECT_EQ(tax.fine_count(), 17);
  EXPECT_EQ(tax.coarse_count(), 5);
}

TEST(Taxonomy, IdentityCoarsensToItself) {
  const auto tax = Taxonomy::identity({"a", "b", "c"});
  for (int k = 0; k < 3; ++k) EXPECT_EQ(tax.coarsen(k), k);
}

TEST(Taxonomy, SharedGroupCoarsensTogether) {
  const auto tax = testing::small_taxonomy();
  EXPECT_EQ(tax.coarsen(0), tax.coarsen(1));
  EXPECT_EQ(tax.group(1), (std::vector<int>{3, 4, 5}));
}

TEST(Taxonomy, OutOfRangeCoarsenThrows) {
  const auto tax = testing::small_taxonomy();
  EXPECT_THROW(tax.coarsen(6), std::out_of_range);
  EXPECT_THROW(tax.coarsen(-1), std::out_of_range);
}

TEST(Taxonomy, StoredCoarseTrackMatchesPerFrameLoop) {
  const auto tax = load_mapping(testing::config_dir() / "salad_taxonomy.tsv");
  const auto spec = load_grammar(testing::config_dir() / "salad_grammar.json", tax);
  for (const auto& v : generate_corpus(spec, 40, 5, tax)) {
    ASSERT_EQ(v.frames_coarse().size(), v.frames_fine().size());
    for (std::size_t t = 0; t < v.frames_fine().size(); ++t) {
      // independent lookup through the label names
      const auto& fine = tax.fine_labels()[static_cast<std::size_t>(v.frames_fine()[t])];
      int expected = -1;
      for (int f = 0; f < tax.fine_count(); ++f)
        if (tax.fine_name(f) == fine) expected = tax.map()[static_cast<std::size_t>(f)];
      EXPECT_EQ(v.frames_coarse()[t], expected);
    }
  }
}

TEST(Taxonomy, RoundTripsThroughFile) {
  const auto dir = testing::scratch_dir("taxonomy");
  const auto tax = load_mapping(testing::config_dir() / "salad_taxonomy.tsv");
  save_mapping(dir / "t.tsv", tax);
  const auto back = load_mapping(dir / "t.tsv");
  EXPECT_EQ(back, tax);
  EXPECT_EQ(back.fingerprint(), tax.fingerprint());
}

TEST(Taxonomy, ShippedTaxonomyShape) {
  const auto tax = load_mapping(testing::config_dir() / "salad_taxonomy.tsv");
  EXPECT_EQ(tax.fine_count(), 12);
  EXPECT_EQ(tax.coarse_count(), 4);
  EXPECT_EQ(tax.levels(), 2);
}

TEST(Taxonomy, CoarsenIsPure) {
  const auto tax = testing::small_taxonomy();
  for (int k = 0; k < tax.fine_count(); ++k) EXPECT_EQ(tax.coarsen(k), tax.coarsen(k));
}

}  // namespace
}  // namespace islands
