// Copyright 2026 The magic-gat Authors
// SPDX-License-Identifier: Apache-2.0

#include "magic/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "magic/error.hpp"
#include "magic/rng.hpp"

namespace magic {

using nlohmann::json;

LabelSchema::LabelSchema(std::vector<std::string> names) : names_(std::move(names)) {
  if (names_.empty()) throw ConfigError("label schema is empty");
  std::unordered_set<std::string> seen;
  for (const auto& n : names_) {
    if (!seen.insert(n).second) throw ConfigError("label schema lists '" + n + "' twice");
  }
}

std::optional<LabelSchema> LabelSchema::builtin(std::string_view name) {
  if (name == "fakeddit2") return LabelSchema({"real", "fake"});
  if (name == "fakeddit3") return LabelSchema({"real", "fake with true text", "fake with false text"});
  if (name == "mfnd") return LabelSchema({"real", "fake", "uncertain"});
  return std::nullopt;
}

LabelSchema LabelSchema::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open label schema " + path.string());
  std::vector<std::string> names;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto last = line.find_last_not_of(" \t");
    names.push_back(line.substr(first, last - first + 1));
  }
  return LabelSchema(std::move(names));
}

LabelSchema LabelSchema::resolve(std::string_view name_or_path) {
  if (auto b = builtin(name_or_path)) return *b;
  return load(std::filesystem::path(std::string(name_or_path)));
}

std::optional<std::size_t> LabelSchema::index_of(std::string_view label) const {
  for (std::size_t i = 0; i < names_.size(); ++i)
    if (names_[i] == label) return i;
  return std::nullopt;
}

namespace {

[[noreturn]] void malformed(std::size_t line_no, const std::string& why) {
  throw FormatError("dataset line " + std::to_string(line_no) + ": " + why);
}

RawRecord parse_line(const std::string& line, std::size_t line_no) {
  json obj;
  try {
    obj = json::parse(line);
  } catch (const json::parse_error& e) {
    malformed(line_no, std::string("invalid JSON (") + e.what() + ")");
  }
  if (!obj.is_object()) malformed(line_no, "expected a JSON object");

  RawRecord rec;
  const auto id = obj.find("id");
  if (id == obj.end() || !id->is_string()) malformed(line_no, "field 'id' must be a string");
  rec.id = id->get<std::string>();

  const auto text = obj.find("text");
  if (text == obj.end() || !text->is_string()) malformed(line_no, "field 'text' must be a string");
  rec.post_text = text->get<std::string>();

  if (const auto label = obj.find("label"); label != obj.end() && !label->is_null()) {
    if (!label->is_string()) malformed(line_no, "field 'label' must be a string");
    rec.label = label->get<std::string>();
  }
  if (const auto comments = obj.find("comments"); comments != obj.end() && !comments->is_null()) {
    if (!comments->is_array()) malformed(line_no, "field 'comments' must be an array of strings");
    for (const auto& c : *comments) {
      if (!c.is_string()) malformed(line_no, "field 'comments' must be an array of strings");
      rec.comments.push_back(c.get<std::string>());
    }
  }
  if (const auto image = obj.find("image"); image != obj.end() && !image->is_null()) {
    if (!image->is_string()) malformed(line_no, "field 'image' must be a string or null");
    rec.image_ref = image->get<std::string>();
  }
  return rec;
}

}  // namespace

std::vector<RawRecord> parse_records(std::string_view text) {
  std::vector<RawRecord> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    std::string line(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    out.push_back(parse_line(line, line_no));
  }
  return out;
}

std::vector<RawRecord> read_records(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open dataset " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_records(buf.str());
}

std::vector<MultimodalRecord> label_records(std::vector<RawRecord> raw, const LabelSchema& schema) {
  std::vector<MultimodalRecord> out;
  out.reserve(raw.size());
  std::unordered_set<std::string> ids;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    RawRecord& r = raw[i];
    if (!ids.insert(r.id).second) throw DataError("duplicate record id '" + r.id + "'");
    if (!r.label) throw DataError("record '" + r.id + "' has no label");
    const auto cls = schema.index_of(*r.label);
    if (!cls) throw DataError("record '" + r.id + "': unknown label '" + *r.label + "'");
    out.push_back(MultimodalRecord{std::move(r.id), *cls, std::move(r.post_text), std::move(r.comments),
                                   std::move(r.image_ref)});
  }
  return out;
}

std::vector<MultimodalRecord> parse_dataset(const std::filesystem::path& path, const LabelSchema& schema) {
  return label_records(read_records(path), schema);
}

namespace {

// Largest-remainder apportionment of `total` items across groups of the given
// sizes. Ties in the remainder go to the lower group index.
std::vector<std::size_t> apportion(std::size_t total, std::span<const std::size_t> sizes) {
  const std::size_t population = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
  std::vector<std::size_t> share(sizes.size(), 0);
  if (population == 0) return share;
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < sizes.size(); ++c) {
    const double quota = static_cast<double>(total) * static_cast<double>(sizes[c]) / static_cast<double>(population);
    share[c] = static_cast<std::size_t>(std::floor(quota));
    assigned += share[c];
    remainders.emplace_back(quota - std::floor(quota), c);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < total && k < remainders.size(); ++k) {
    const std::size_t c = remainders[k].second;
    if (share[c] < sizes[c]) {
      ++share[c];
      ++assigned;
    }
  }
  return share;
}

}  // namespace

DatasetSplit split_dataset(std::span<const std::size_t> labels, std::size_t num_classes, std::uint64_t seed,
                           SplitRatios ratios) {
  if (!(ratios.test >= 0.0 && ratios.test < 1.0) || !(ratios.validation >= 0.0 && ratios.validation < 1.0)) {
    throw ConfigError("split ratios must lie in [0, 1)");
  }
  std::vector<std::vector<std::size_t>> by_class(num_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= num_classes) throw DataError("label " + std::to_string(labels[i]) + " out of range");
    by_class[labels[i]].push_back(i);
  }
  constexpr std::size_t kPartitions = 3;
  std::vector<std::size_t> sizes(num_classes);
  for (std::size_t c = 0; c < num_classes; ++c) {
    sizes[c] = by_class[c].size();
    if (sizes[c] > 0 && sizes[c] < kPartitions) {
      throw DataError("class " + std::to_string(c) + " has " + std::to_string(sizes[c]) +
                      " records, fewer than the 3 partitions");
    }
  }

  const std::size_t total = labels.size();
  const auto n_test = static_cast<std::size_t>(std::llround(ratios.test * static_cast<double>(total)));
  const std::vector<std::size_t> test_share = apportion(n_test, sizes);

  std::vector<std::size_t> pool_sizes(num_classes);
  for (std::size_t c = 0; c < num_classes; ++c) pool_sizes[c] = sizes[c] - test_share[c];
  const std::size_t pool = total - n_test;
  const auto n_val = static_cast<std::size_t>(std::llround(ratios.validation * static_cast<double>(pool)));
  const std::vector<std::size_t> val_share = apportion(n_val, pool_sizes);

  DatasetSplit split;
  for (std::size_t c = 0; c < num_classes; ++c) {
    std::vector<std::size_t>& members = by_class[c];
    Rng rng(derive_seed({seed, c}));
    rng.shuffle(std::span<std::size_t>(members));
    std::size_t k = 0;
    for (; k < test_share[c]; ++k) split.test.push_back(members[k]);
    for (; k < test_share[c] + val_share[c]; ++k) split.validation.push_back(members[k]);
    for (; k < members.size(); ++k) split.train.push_back(members[k]);
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.validation.begin(), split.validation.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

DatasetSplit split_dataset(std::span<const MultimodalRecord> records, std::size_t num_classes, std::uint64_t seed,
                           SplitRatios ratios) {
  std::vector<std::size_t> labels;
  labels.reserve(records.size());
  for (const auto& r : records) labels.push_back(r.label);
  return split_dataset(labels, num_classes, seed, ratios);
}

}  // namespace magic
