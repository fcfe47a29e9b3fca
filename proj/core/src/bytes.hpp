// Copyright 2026 The magic-gat Authors
// SPDX-License-Identifier: Apache-2.0

// Little-endian byte packing and whole-file I/O shared by the binary formats.

#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace magic::detail {

inline void put_uint(std::vector<std::byte>& out, std::uint64_t v, int bytes) {
  for (int k = 0; k < bytes; ++k) out.push_back(static_cast<std::byte>((v >> (8 * k)) & 0xffu));
}
inline void put_u32(std::vector<std::byte>& out, std::uint32_t v) { put_uint(out, v, 4); }
inline void put_u64(std::vector<std::byte>& out, std::uint64_t v) { put_uint(out, v, 8); }
inline void put_f64(std::vector<std::byte>& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }
inline void put_bytes(std::vector<std::byte>& out, std::string_view s) {
  for (char c : s) out.push_back(static_cast<std::byte>(c));
}

inline std::uint64_t get_uint(std::span<const std::byte> in, std::size_t at, int bytes) {
  std::uint64_t v = 0;
  for (int k = 0; k < bytes; ++k) v |= static_cast<std::uint64_t>(in[at + k]) << (8 * k);
  return v;
}
inline std::uint32_t get_u32(std::span<const std::byte> in, std::size_t at) {
  return static_cast<std::uint32_t>(get_uint(in, at, 4));
}
inline std::uint64_t get_u64(std::span<const std::byte> in, std::size_t at) { return get_uint(in, at, 8); }

std::vector<std::byte> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::byte> bytes);

}  // namespace magic::detail
