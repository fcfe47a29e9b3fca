// Copyright 2026 The magic-gat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace magic {

/// Label vocabulary: names in class-index order.
class LabelSchema {
 public:
  LabelSchema() = default;
  explicit LabelSchema(std::vector<std::string> names);

  /// Built-in vocabularies: "fakeddit2" (real, fake), "fakeddit3" (real, fake
  /// with true text, fake with false text) and "mfnd" (real, fake, uncertain).
  static std::optional<LabelSchema> builtin(std::string_view name);
  /// Text file, one label per line; blank lines and '#' comments ignored.
  static LabelSchema load(const std::filesystem::path& path);
  /// Built-in name if it matches one, otherwise a schema file path.
  static LabelSchema resolve(std::string_view name_or_path);

  std::size_t size() const noexcept { return names_.size(); }
  const std::vector<std::string>& names() const noexcept { return names_; }
  const std::string& name(std::size_t index) const { return names_.at(index); }
  std::optional<std::size_t> index_of(std::string_view label) const;

  friend bool operator==(const LabelSchema&, const LabelSchema&) = default;

 private:
  std::vector<std::string> names_;
};

/// One dataset line before label mapping. `label` may be absent (prediction input).
struct RawRecord {
  std::string id;
  std::optional<std::string> label;
  std::string post_text;
  std::vector<std::string> comments;
  std::optional<std::string> image_ref;
};

struct MultimodalRecord {
  std::string id;
  std::size_t label = 0;
  std::string post_text;
  std::vector<std::string> comments;
  std::optional<std::string> image_ref;
};

/// Parses JSON-lines records (fields id, label, text, comments, image). Blank
/// lines are skipped. Malformed lines raise FormatError naming the 1-based line.
std::vector<RawRecord> parse_records(std::string_view text);
std::vector<RawRecord> read_records(const std::filesystem::path& path);

/// Maps labels through `schema`; rejects unknown labels and duplicate ids.
std::vector<MultimodalRecord> label_records(std::vector<RawRecord> raw, const LabelSchema& schema);
std::vector<MultimodalRecord> parse_dataset(const std::filesystem::path& path, const LabelSchema& schema);

struct SplitRatios {
  /// Fraction of all records held out for the final test.
  double test = 0.20;
  /// Fraction of the remaining pool used for validation.
  double validation = 0.20;
};

/// Indices into the record list, each partition in ascending (file) order.
struct DatasetSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
};

/// Stratified, seeded three-way split. Partition totals are rounded from the
/// ratios and apportioned across classes by largest remainder, so every class
/// lands within one record of its proportional share. Throws DataError when a
/// class has fewer records than there are partitions.
DatasetSplit split_dataset(std::span<const std::size_t> labels, std::size_t num_classes, std::uint64_t seed,
                           SplitRatios ratios = {});
DatasetSplit split_dataset(std::span<const MultimodalRecord> records, std::size_t num_classes,
                           std::uint64_t seed, SplitRatios ratios = {});

template <class T>
std::vector<T> select(std::span<const T> items, std::span<const std::size_t> index) {
  std::vector<T> out;
  out.reserve(index.size());
  for (std::size_t i : index) out.push_back(items[i]);
  return out;
}

}  // namespace magic
