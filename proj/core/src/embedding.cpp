// Copyright 2026 The magic-gat Authors
// SPDX-License-Identifier: Apache-2.0

#include "magic/embedding.hpp"

#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "bytes.hpp"
#include "magic/error.hpp"
#include "magic/rng.hpp"

namespace magic {

using detail::get_u32;
using detail::put_u32;
using detail::read_file;
using detail::write_file;

using nlohmann::json;
using nlohmann::ordered_json;

EmbeddingStore::EmbeddingStore(std::size_t dim) : dim_(dim) {
  if (dim == 0) throw ShapeError("embedding dimension must be positive");
}

void EmbeddingStore::add(std::string key, std::span<const double> values) {
  if (values.size() != dim_) {
    throw ShapeError("embedding '" + key + "' has " + std::to_string(values.size()) + " values, store dim is " +
                     std::to_string(dim_));
  }
  if (lookup_.contains(key)) throw DataError("duplicate embedding key '" + key + "'");
  const auto r = static_cast<std::uint32_t>(rows_);
  values_.insert(values_.end(), values.begin(), values.end());
  ++rows_;
  lookup_.emplace(key, r);
  index_.emplace_back(std::move(key), r);
}

bool EmbeddingStore::contains(std::string_view key) const { return lookup_.contains(std::string(key)); }

std::optional<std::span<const double>> EmbeddingStore::find(std::string_view key) const {
  const auto it = lookup_.find(std::string(key));
  if (it == lookup_.end()) return std::nullopt;
  return row(it->second);
}

// ---- MEB1 ----

namespace {

std::string index_json(const EmbeddingStore& store) {
  ordered_json idx = ordered_json::object();
  for (const auto& [key, row] : store.index()) idx[key] = row;
  return idx.dump();
}

}  // namespace

std::vector<std::byte> encode_meb(const EmbeddingStore& store) {
  std::vector<std::byte> out;
  const std::string idx = index_json(store);
  out.reserve(16 + store.values().size() * 4 + idx.size());
  for (char c : kMebMagic) out.push_back(static_cast<std::byte>(c));
  put_u32(out, static_cast<std::uint32_t>(store.rows()));
  put_u32(out, static_cast<std::uint32_t>(store.dim()));
  for (double v : store.values()) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  put_u32(out, static_cast<std::uint32_t>(idx.size()));
  for (char c : idx) out.push_back(static_cast<std::byte>(c));
  return out;
}

EmbeddingStore decode_meb(std::span<const std::byte> bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), kMebMagic, 4) != 0) {
    throw FormatError("not an embedding store: expected magic 'MEB1'");
  }
  const std::uint32_t rows = get_u32(bytes, 4);
  const std::uint32_t dim = get_u32(bytes, 8);
  if (dim == 0) throw FormatError("MEB1: dimension must be positive");
  const std::uint64_t payload = static_cast<std::uint64_t>(rows) * dim * 4;
  if (bytes.size() < 12 + payload + 4) throw FormatError("MEB1: truncated payload");

  EmbeddingStore store(dim);
  store.rows_ = rows;
  store.values_.resize(static_cast<std::size_t>(rows) * dim);
  for (std::size_t i = 0; i < store.values_.size(); ++i) {
    store.values_[i] = static_cast<double>(std::bit_cast<float>(get_u32(bytes, 12 + 4 * i)));
  }
  const std::size_t idx_at = 12 + static_cast<std::size_t>(payload);
  const std::uint32_t idx_len = get_u32(bytes, idx_at);
  if (bytes.size() < idx_at + 4 + idx_len) throw FormatError("MEB1: truncated index");
  if (bytes.size() != idx_at + 4 + idx_len) throw FormatError("MEB1: trailing bytes after index");
  const std::string text(reinterpret_cast<const char*>(bytes.data()) + idx_at + 4, idx_len);

  std::unordered_set<std::string> keys;
  std::string duplicate;
  ordered_json::parser_callback_t guard = [&](int depth, ordered_json::parse_event_t event, ordered_json& parsed) {
    if (event == ordered_json::parse_event_t::key && depth == 1) {
      auto k = parsed.get<std::string>();
      if (!keys.insert(k).second && duplicate.empty()) duplicate = k;
    }
    return true;
  };
  ordered_json idx;
  try {
    idx = ordered_json::parse(text, guard);
  } catch (const json::exception& e) {
    throw FormatError(std::string("MEB1: invalid index JSON: ") + e.what());
  }
  if (!duplicate.empty()) throw FormatError("MEB1: duplicate key '" + duplicate + "' in index");
  if (!idx.is_object()) throw FormatError("MEB1: index must be a JSON object");

  std::unordered_set<std::uint32_t> used;
  for (const auto& [key, value] : idx.items()) {
    if (!value.is_number_unsigned()) throw FormatError("MEB1: row index for '" + key + "' is not an unsigned integer");
    const auto row = value.get<std::uint64_t>();
    if (row >= rows) throw FormatError("MEB1: row index for '" + key + "' out of range");
    if (!used.insert(static_cast<std::uint32_t>(row)).second) {
      throw FormatError("MEB1: row " + std::to_string(row) + " indexed twice");
    }
    store.lookup_.emplace(key, static_cast<std::uint32_t>(row));
    store.index_.emplace_back(key, static_cast<std::uint32_t>(row));
  }
  return store;
}

void write_meb(const std::filesystem::path& path, const EmbeddingStore& store) {
  write_file(path, encode_meb(store));
}

EmbeddingStore read_meb(const std::filesystem::path& path) { return decode_meb(read_file(path)); }

void write_meb_jsonl(const std::filesystem::path& path, const EmbeddingStore& store) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out << ordered_json{{"dim", store.dim()}, {"rows", store.rows()}}.dump() << '\n';
  std::vector<bool> written(store.rows(), false);
  auto emit = [&](const std::string* key, std::uint32_t row) {
    ordered_json line;
    line["key"] = key ? ordered_json(*key) : ordered_json(nullptr);
    line["row"] = row;
    std::vector<float> vals;
    for (double v : store.row(row)) vals.push_back(static_cast<float>(v));
    line["values"] = vals;
    out << line.dump() << '\n';
    written[row] = true;
  };
  for (const auto& [key, row] : store.index()) emit(&key, row);
  for (std::uint32_t r = 0; r < store.rows(); ++r)
    if (!written[r]) emit(nullptr, r);
}

EmbeddingStore read_meb_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw FormatError("embedding JSONL: missing header line");
  json header;
  try {
    header = json::parse(line);
  } catch (const json::exception& e) {
    throw FormatError(std::string("embedding JSONL: bad header: ") + e.what());
  }
  if (!header.contains("dim") || !header.contains("rows")) throw FormatError("embedding JSONL: header needs dim and rows");
  EmbeddingStore store(header["dim"].get<std::size_t>());
  const auto rows = header["rows"].get<std::size_t>();
  store.rows_ = rows;
  store.values_.assign(rows * store.dim_, 0.0);
  std::vector<bool> seen(rows, false);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::exception& e) {
      throw FormatError("embedding JSONL line " + std::to_string(line_no) + ": " + e.what());
    }
    const auto row = obj.at("row").get<std::size_t>();
    if (row >= rows || seen[row]) throw FormatError("embedding JSONL line " + std::to_string(line_no) + ": bad row");
    seen[row] = true;
    const auto vals = obj.at("values").get<std::vector<float>>();
    if (vals.size() != store.dim_) throw FormatError("embedding JSONL line " + std::to_string(line_no) + ": bad width");
    for (std::size_t j = 0; j < vals.size(); ++j) store.values_[row * store.dim_ + j] = vals[j];
    if (!obj.at("key").is_null()) {
      auto key = obj.at("key").get<std::string>();
      if (store.lookup_.contains(key)) throw FormatError("embedding JSONL: duplicate key '" + key + "'");
      store.lookup_.emplace(key, static_cast<std::uint32_t>(row));
      store.index_.emplace_back(std::move(key), static_cast<std::uint32_t>(row));
    }
  }
  return store;
}

EmbeddingStore read_embeddings(const std::filesystem::path& path) {
  if (path.extension() == ".jsonl") return read_meb_jsonl(path);
  return read_meb(path);
}

std::string post_key(std::string_view id) { return "post:" + std::string(id); }
std::string comment_key(std::string_view id, std::size_t ordinal) {
  return "comment:" + std::string(id) + ":" + std::to_string(ordinal);
}
std::string image_key(std::string_view id) { return "image:" + std::string(id); }

// ---- fallback embedder ----

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string word;
  auto flush = [&] {
    if (!word.empty()) tokens.push_back(std::move(word));
    word.clear();
  };
  for (std::size_t i = 0; i < text.size();) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (c < 0x80) {
      if (std::isalnum(c)) {
        word.push_back(static_cast<char>(std::tolower(c)));
      } else {
        flush();
      }
      ++i;
      continue;
    }
    flush();
    std::size_t len = 1;
    if ((c & 0xe0) == 0xc0) len = 2;
    else if ((c & 0xf0) == 0xe0) len = 3;
    else if ((c & 0xf8) == 0xf0) len = 4;
    len = std::min(len, text.size() - i);
    tokens.emplace_back(text.substr(i, len));
    i += len;
  }
  flush();
  return tokens;
}

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::vector<double> fallback_embed(std::string_view text, std::size_t dim, std::uint64_t seed) {
  if (dim == 0) throw ShapeError("fallback_embed: dim must be positive");
  std::vector<double> v(dim, 0.0);
  const std::vector<std::string> tokens = tokenize(text);
  const std::uint64_t salt = mix64(seed);
  auto hash_in = [&](std::string_view feature) {
    const std::uint64_t h = mix64(fnv1a(feature) ^ salt);
    const double sign = (mix64(h ^ 0x5bd1e995ULL) >> 63) != 0 ? -1.0 : 1.0;
    v[h % dim] += sign;
  };
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    hash_in(tokens[i]);
    if (i + 1 < tokens.size()) hash_in(tokens[i] + " " + tokens[i + 1]);
  }
  double norm = 0.0;
  for (double x : v) norm += x * x;
  if (norm == 0.0) return v;
  norm = std::sqrt(norm);
  for (double& x : v) x /= norm;
  return v;
}

EmbeddingStore fallback_store(std::span<const RawRecord> records, std::size_t dim, std::uint64_t seed) {
  EmbeddingStore store(dim);
  const std::vector<double> zeros(dim, 0.0);
  for (const RawRecord& r : records) {
    store.add(post_key(r.id), fallback_embed(r.post_text, dim, seed));
    for (std::size_t c = 0; c < r.comments.size(); ++c) {
      store.add(comment_key(r.id, c), fallback_embed(r.comments[c], dim, seed));
    }
    store.add(image_key(r.id), r.image_ref ? fallback_embed(*r.image_ref, dim, seed) : zeros);
  }
  return store;
}

}  // namespace magic
