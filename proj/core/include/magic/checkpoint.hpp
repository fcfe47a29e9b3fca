// Copyright 2026 The magic-gat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "magic/config.hpp"
#include "magic/dataset.hpp"
#include "magic/model.hpp"

namespace magic {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// A trained model with everything needed to rebuild and reuse it. Holds no
/// paths or timestamps, so identical runs give identical files.
struct Checkpoint {
  RunConfig config;
  std::vector<std::string> labels;
  MagicModel model;

  std::size_t best_n() const noexcept { return model.depth(); }
};

// Layout: "MGC1", u32 version, u64 payload length, payload, u32 CRC32 of the
// payload. All integers little-endian. Payload: config text, input dim, class
// count, depth, labels, then every parameter as (name, rows, cols, f64 data)
// in parameters() order.
std::vector<std::byte> encode_checkpoint(const Checkpoint& checkpoint);
/// Throws FormatError on bad magic, version, length, CRC or tensor shapes.
Checkpoint decode_checkpoint(std::span<const std::byte> bytes);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Throws DataError unless the schema has the checkpoint's classes, in order.
void require_schema(const Checkpoint& checkpoint, const LabelSchema& schema);

}  // namespace magic
