// Copyright 2026 The magic-gat Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <fstream>

#include <gtest/gtest.h>

#include "magic/dataset.hpp"
#include "magic/error.hpp"
#include "synthetic.hpp"

namespace magic {
namespace {

TEST(LabelSchema, Builtins) {
  EXPECT_EQ(LabelSchema::builtin("fakeddit2")->names(), (std::vector<std::string>{"real", "fake"}));
  const LabelSchema mfnd = *LabelSchema::builtin("mfnd");
  EXPECT_EQ(mfnd.index_of("real"), 0u);
  EXPECT_EQ(mfnd.index_of("fake"), 1u);
  EXPECT_EQ(mfnd.index_of("uncertain"), 2u);
  EXPECT_EQ(LabelSchema::builtin("fakeddit3")->size(), 3u);
  EXPECT_FALSE(LabelSchema::builtin("nope"));
}

TEST(LabelSchema, RejectsDuplicatesAndEmpty) {
  EXPECT_THROW(LabelSchema(std::vector<std::string>{"a", "a"}), ConfigError);
  EXPECT_THROW(LabelSchema(std::vector<std::string>{}), ConfigError);
}

TEST(LabelSchema, LoadsFileSkippingCommentsAndBlanks) {
  const auto dir = testing::scratch_dir("schema");
  {
    std::ofstream f(dir / "s.txt");
    f << "# labels\nreal\n\nsatire\nfake\n";
  }
  EXPECT_EQ(LabelSchema::load(dir / "s.txt").names(), (std::vector<std::string>{"real", "satire", "fake"}));
  EXPECT_EQ(LabelSchema::resolve((dir / "s.txt").string()).size(), 3u);
  EXPECT_EQ(LabelSchema::resolve("mfnd"), *LabelSchema::builtin("mfnd"));
}

TEST(ParseRecords, FieldsAndOptionalParts) {
  const auto raw = parse_records(
      R"({"id": "a", "label": "fake", "text": "Hello", "comments": ["x", "y"], "image": "img-a"})"
      "\n"
      R"({"id": "b", "label": "real", "text": "Bye", "comments": [], "image": null})"
      "\n\n");
  ASSERT_EQ(raw.size(), 2u);
  EXPECT_EQ(raw[0].comments, (std::vector<std::string>{"x", "y"}));
  EXPECT_EQ(raw[0].image_ref, "img-a");
  EXPECT_TRUE(raw[1].comments.empty());
  EXPECT_FALSE(raw[1].image_ref);
}

TEST(ParseRecords, MissingOptionalFieldsAreAllowed) {
  const auto raw = parse_records(R"({"id": "c", "label": "real", "text": "t"})");
  ASSERT_EQ(raw.size(), 1u);
  EXPECT_TRUE(raw[0].comments.empty());
  EXPECT_FALSE(raw[0].image_ref);
}

TEST(ParseRecords, EmptyInputIsEmpty) { EXPECT_TRUE(parse_records("").empty()); }

TEST(ParseRecords, MalformedLineReportsLineNumber) {
  try {
    parse_records("{\"id\": \"a\", \"label\": \"real\", \"text\": \"t\"}\n{not json\n");
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_records(R"({"id": 3, "label": "real", "text": "t"})"), FormatError);
  EXPECT_THROW(parse_records(R"({"id": "a", "label": "real", "text": "t", "comments": [1]})"), FormatError);
}

TEST(LabelRecords, MapsThroughSchema) {
  const auto raw = parse_records(
      R"({"id": "a", "label": "uncertain", "text": ""})"
      "\n"
      R"({"id": "b", "label": "real", "text": ""})");
  const auto recs = label_records(raw, *LabelSchema::builtin("mfnd"));
  EXPECT_EQ(recs[0].label, 2u);
  EXPECT_EQ(recs[1].label, 0u);
}

TEST(LabelRecords, UnknownLabelAndDuplicateIdThrow) {
  const LabelSchema s = *LabelSchema::builtin("fakeddit2");
  EXPECT_THROW(label_records(parse_records(R"({"id": "a", "label": "satire", "text": ""})"), s), DataError);
  EXPECT_THROW(label_records(parse_records("{\"id\": \"a\", \"label\": \"real\", \"text\": \"\"}\n"
                                           "{\"id\": \"a\", \"label\": \"fake\", \"text\": \"\"}"),
                             s),
               DataError);
}

TEST(ParseDataset, ReadsFileInOrder) {
  const auto dir = testing::scratch_dir("dataset");
  const auto recs = testing::separable_records(10, 3);
  testing::write_records(dir / "d.jsonl", recs);
  const auto parsed = parse_dataset(dir / "d.jsonl", *LabelSchema::builtin("fakeddit2"));
  ASSERT_EQ(parsed.size(), 10u);
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(parsed[i].id, recs[i].id);
  EXPECT_THROW(parse_dataset(dir / "missing.jsonl", *LabelSchema::builtin("fakeddit2")), DataError);
}

std::vector<std::size_t> balanced_labels(std::size_t n, std::size_t k) {
  std::vector<std::size_t> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = i % k;
  return labels;
}

TEST(Split, DefaultRatiosOnHundred) {
  const auto s = split_dataset(balanced_labels(100, 2), 2, 0);
  EXPECT_EQ(s.train.size(), 64u);
  EXPECT_EQ(s.validation.size(), 16u);
  EXPECT_EQ(s.test.size(), 20u);
}

TEST(Split, DeterministicUnderSeed) {
  const auto labels = balanced_labels(90, 3);
  const auto a = split_dataset(labels, 3, 11), b = split_dataset(labels, 3, 11), c = split_dataset(labels, 3, 12);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.test, b.test);
  EXPECT_NE(a.test, c.test);
}

TEST(Split, DisjointExhaustiveStratified) {
  Rng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 30 + rng.below(200);
    std::vector<std::size_t> labels(n);
    // Skewed 3-class mix.
    for (auto& l : labels) {
      const double u = rng.uniform();
      l = u < 0.5 ? 0 : (u < 0.8 ? 1 : 2);
    }
    std::vector<std::size_t> counts(3);
    for (auto l : labels) ++counts[l];
    if (*std::min_element(counts.begin(), counts.end()) < 3) continue;
    const auto s = split_dataset(labels, 3, trial);
    std::vector<int> seen(n, 0);
    for (const auto* part : {&s.train, &s.validation, &s.test})
      for (auto i : *part) ++seen[i];
    EXPECT_TRUE(std::all_of(seen.begin(), seen.end(), [](int v) { return v == 1; }));
    for (const auto* part : {&s.train, &s.validation, &s.test}) {
      for (std::size_t c = 0; c < 3; ++c) {
        const auto in_part = std::count_if(part->begin(), part->end(), [&](auto i) { return labels[i] == c; });
        const double expected = static_cast<double>(counts[c]) * part->size() / n;
        EXPECT_LE(std::abs(in_part - expected), 1.0 + 1e-9) << "class " << c;
      }
    }
  }
}

TEST(Split, SmallClassThrows) {
  EXPECT_THROW(split_dataset(std::vector<std::size_t>{0, 0, 0, 0, 1, 1}, 2, 0), DataError);
  // An absent class is fine.
  EXPECT_NO_THROW(split_dataset(std::vector<std::size_t>{0, 0, 0, 0, 0}, 3, 0));
}

TEST(Split, BadRatiosAndLabelsThrow) {
  EXPECT_THROW(split_dataset(balanced_labels(10, 2), 2, 0, SplitRatios{1.0, 0.2}), ConfigError);
  EXPECT_THROW(split_dataset(std::vector<std::size_t>{0, 1, 5}, 2, 0), DataError);
}

}  // namespace
}  // namespace magic
