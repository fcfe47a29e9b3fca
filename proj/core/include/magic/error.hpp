// Copyright 2026 The magic-gat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace magic {

/// Base of every exception thrown by the library. `kind()` is a short stable
/// tag used by the CLI when it reports failures on one machine-readable line.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& what) : Error("shape", what) {}
};

/// NaN/Inf produced or consumed, log of a non-positive value, divergence.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error("numeric", what) {}
};

/// Malformed binary or text files (bad magic, truncation, CRC mismatch).
class FormatError : public Error {
 public:
  explicit FormatError(const std::string& what) : Error("format", what) {}
};

/// Dataset content problems: unknown labels, duplicate ids, missing embeddings.
class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error("data", what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error("config", what) {}
};

/// Misuse of the gradient tape (backward twice, non-scalar loss, stale handles).
class TapeError : public Error {
 public:
  explicit TapeError(const std::string& what) : Error("tape", what) {}
};

}  // namespace magic
