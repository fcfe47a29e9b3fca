// Copyright 2026 The magic-gat Authors
// SPDX-License-Identifier: Apache-2.0

#include "magic/checkpoint.hpp"

#include <zlib.h>

#include "bytes.hpp"
#include "magic/error.hpp"

namespace magic {

using namespace detail;

namespace {

constexpr std::string_view kMagic = "MGC1";
constexpr std::size_t kHeader = 16;

std::uint32_t crc32_of(std::span<const std::byte> bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes a uInt length; feed large payloads in pieces.
  std::size_t at = 0;
  while (at < bytes.size()) {
    const std::size_t n = std::min<std::size_t>(bytes.size() - at, 1u << 30);
    crc = crc32(crc, reinterpret_cast<const Bytef*>(bytes.data() + at), static_cast<uInt>(n));
    at += n;
  }
  return static_cast<std::uint32_t>(crc);
}

void put_string(std::vector<std::byte>& out, std::string_view s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  put_bytes(out, s);
}

class Reader {
 public:
  explicit Reader(std::span<const std::byte> in) : in_(in) {}
  std::uint32_t u32() { need(4); const auto v = get_u32(in_, at_); at_ += 4; return v; }
  std::uint64_t u64() { need(8); const auto v = get_u64(in_, at_); at_ += 8; return v; }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string string() {
    const std::uint32_t n = u32();
    need(n);
    std::string s(reinterpret_cast<const char*>(in_.data() + at_), n);
    at_ += n;
    return s;
  }
  bool done() const { return at_ == in_.size(); }

 private:
  void need(std::size_t n) const {
    if (in_.size() - at_ < n) throw FormatError("checkpoint payload is truncated");
  }
  std::span<const std::byte> in_;
  std::size_t at_ = 0;
};

}  // namespace

std::vector<std::byte> encode_checkpoint(const Checkpoint& checkpoint) {
  std::vector<std::byte> payload;
  put_string(payload, to_text(checkpoint.config));
  put_u64(payload, checkpoint.model.input_dim);
  put_u64(payload, checkpoint.model.num_classes);
  put_u64(payload, checkpoint.model.depth());
  put_u32(payload, static_cast<std::uint32_t>(checkpoint.labels.size()));
  for (const auto& l : checkpoint.labels) put_string(payload, l);
  const std::vector<ConstNamedTensor> params = parameters(checkpoint.model);
  put_u32(payload, static_cast<std::uint32_t>(params.size()));
  for (const auto& p : params) {
    put_string(payload, p.name);
    put_u64(payload, p.value->rows());
    put_u64(payload, p.value->cols());
    for (double v : p.value->data()) put_f64(payload, v);
  }

  std::vector<std::byte> out;
  out.reserve(kHeader + payload.size() + 4);
  put_bytes(out, kMagic);
  put_u32(out, kCheckpointVersion);
  put_u64(out, payload.size());
  out.insert(out.end(), payload.begin(), payload.end());
  put_u32(out, crc32_of(payload));
  return out;
}

Checkpoint decode_checkpoint(std::span<const std::byte> bytes) {
  if (bytes.size() < 4 || std::string_view(reinterpret_cast<const char*>(bytes.data()), 4) != kMagic) {
    throw FormatError("not a model checkpoint: expected magic 'MGC1'");
  }
  if (bytes.size() < kHeader) throw FormatError("checkpoint header is truncated");
  const std::uint32_t version = get_u32(bytes, 4);
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version) + " (expected " +
                      std::to_string(kCheckpointVersion) + ")");
  }
  const std::uint64_t length = get_u64(bytes, 8);
  if (bytes.size() - kHeader < 4 || length != bytes.size() - kHeader - 4) {
    throw FormatError("checkpoint length mismatch: header says " + std::to_string(length) + " payload bytes");
  }
  const std::span<const std::byte> payload = bytes.subspan(kHeader, length);
  if (crc32_of(payload) != get_u32(bytes, kHeader + length)) throw FormatError("checkpoint CRC32 mismatch");

  Reader r(payload);
  Checkpoint c;
  try {
    c.config = parse_config(r.string());
  } catch (const ConfigError& e) {
    throw FormatError(std::string("checkpoint config is invalid: ") + e.what());
  }
  const std::uint64_t input_dim = r.u64();
  const std::uint64_t num_classes = r.u64();
  const std::uint64_t depth = r.u64();
  const std::uint32_t n_labels = r.u32();
  for (std::uint32_t i = 0; i < n_labels; ++i) c.labels.push_back(r.string());
  if (n_labels != num_classes) throw FormatError("checkpoint lists " + std::to_string(n_labels) + " labels for " +
                                                 std::to_string(num_classes) + " classes");
  try {
    c.model = MagicModel::init(c.config.effective_model(), input_dim, num_classes, depth);
  } catch (const ConfigError& e) {
    throw FormatError(std::string("checkpoint describes an invalid model: ") + e.what());
  }
  const std::vector<NamedTensor> params = parameters(c.model);
  if (r.u32() != params.size()) throw FormatError("checkpoint tensor count does not match its model");
  for (const auto& p : params) {
    const std::string name = r.string();
    const std::uint64_t rows = r.u64(), cols = r.u64();
    if (name != p.name || rows != p.value->rows() || cols != p.value->cols()) {
      throw FormatError("checkpoint tensor '" + name + "' (" + std::to_string(rows) + "x" + std::to_string(cols) +
                        ") does not match expected '" + p.name + "' (" + p.value->shape_string() + ")");
    }
    for (double& v : p.value->data()) v = r.f64();
  }
  if (!r.done()) throw FormatError("checkpoint payload has trailing bytes");
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  write_file(path, encode_checkpoint(checkpoint));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(read_file(path)); }

void require_schema(const Checkpoint& checkpoint, const LabelSchema& schema) {
  if (schema.size() != checkpoint.model.num_classes) {
    throw DataError("checkpoint has " + std::to_string(checkpoint.model.num_classes) + " classes but the schema has " +
                    std::to_string(schema.size()));
  }
  for (std::size_t i = 0; i < schema.size(); ++i) {
    if (schema.names()[i] != checkpoint.labels[i]) {
      throw DataError("schema label " + std::to_string(i) + " is '" + schema.names()[i] + "' but the checkpoint has '" +
                      checkpoint.labels[i] + "'");
    }
  }
}

}  // namespace magic
