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
#include <unordered_map>
#include <utility>
#include <vector>

#include "magic/dataset.hpp"
#include "magic/tensor.hpp"

namespace magic {

/// Keyed embedding rows. Values are held as doubles; on disk they are 32-bit.
class EmbeddingStore {
 public:
  explicit EmbeddingStore(std::size_t dim);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t rows() const noexcept { return rows_; }

  /// Appends a row under `key`. Throws DataError on duplicate key or wrong length.
  void add(std::string key, std::span<const double> values);
  bool contains(std::string_view key) const;
  std::optional<std::span<const double>> find(std::string_view key) const;
  std::span<const double> row(std::size_t r) const { return {values_.data() + r * dim_, dim_}; }

  /// (key, row) pairs in index order.
  const std::vector<std::pair<std::string, std::uint32_t>>& index() const noexcept { return index_; }
  std::span<const double> values() const noexcept { return values_; }

 private:
  friend EmbeddingStore decode_meb(std::span<const std::byte> bytes);
  friend EmbeddingStore read_meb_jsonl(const std::filesystem::path& path);

  std::size_t dim_;
  std::size_t rows_ = 0;
  std::vector<double> values_;
  std::vector<std::pair<std::string, std::uint32_t>> index_;
  std::unordered_map<std::string, std::uint32_t> lookup_;
};

inline constexpr char kMebMagic[4] = {'M', 'E', 'B', '1'};

/// MEB1 layout (all integers little-endian):
///   "MEB1" | u32 rows R | u32 dim D | R*D f32 row-major | u32 L | L bytes JSON {key: row}
std::vector<std::byte> encode_meb(const EmbeddingStore& store);
EmbeddingStore decode_meb(std::span<const std::byte> bytes);
void write_meb(const std::filesystem::path& path, const EmbeddingStore& store);
EmbeddingStore read_meb(const std::filesystem::path& path);

/// Debug variant: one JSON object per row, {"key", "row", "values"}.
void write_meb_jsonl(const std::filesystem::path& path, const EmbeddingStore& store);
EmbeddingStore read_meb_jsonl(const std::filesystem::path& path);

/// Dispatches on extension: ".jsonl" reads the debug variant, anything else MEB1.
EmbeddingStore read_embeddings(const std::filesystem::path& path);

// Store keys shared with the exporter.
std::string post_key(std::string_view id);
std::string comment_key(std::string_view id, std::size_t ordinal);
std::string image_key(std::string_view id);

/// Lower-cased tokens: ASCII alphanumeric runs form words, every other
/// non-ASCII code point is a token of its own, everything else separates.
std::vector<std::string> tokenize(std::string_view text);

/// Deterministic feature hashing of unigrams and bigrams into `dim` signed
/// buckets, L2-normalized. Text without tokens maps to the zero vector.
std::vector<double> fallback_embed(std::string_view text, std::size_t dim, std::uint64_t seed);

/// Fallback rows for every post and comment of `records`. Present images are
/// embedded from their reference string; absent ones get a zero row.
EmbeddingStore fallback_store(std::span<const RawRecord> records, std::size_t dim, std::uint64_t seed);

}  // namespace magic
