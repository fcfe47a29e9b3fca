// Copyright 2026 The magic-gat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "magic/dataset.hpp"
#include "magic/graph.hpp"
#include "magic/model.hpp"
#include "magic/training.hpp"

namespace magic {

/// Every tunable of a run. Text form is flat `key = value` lines; `#` starts a
/// comment. The single `seed` drives splitting, initialization, shuffling and
/// dropout.
struct RunConfig {
  std::string schema = "fakeddit2";
  SplitRatios split;
  CommentLinks comment_links = CommentLinks::kStar;
  bool image_comment_edges = false;
  ModelConfig model;
  TrainConfig train;
  Variant variant = Variant::kFull;
  std::uint64_t seed = 0;

  /// Model settings after the ablation variant and seed are applied.
  ModelConfig effective_model() const;
  TrainConfig effective_train() const;
  GraphOptions graph_options() const;
  void validate() const;
};

struct ConfigKey {
  std::string name;
  std::string default_value;
  std::string help;
};
const std::vector<ConfigKey>& config_keys();

/// Throws ConfigError naming the line for unknown keys, repeated keys and bad
/// values.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);
/// Canonical text listing every key; parse_config(to_text(c)) reproduces c.
std::string to_text(const RunConfig& config);

/// Sets `key` to `value` as if it appeared in a config file.
void set_config_value(RunConfig& config, std::string_view key, std::string_view value);
/// Applies MAGIC_SEED when it is set. Returns true if it was.
bool apply_environment(RunConfig& config);

}  // namespace magic
