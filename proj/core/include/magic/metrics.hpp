// Copyright 2026 The magic-gat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace magic {

/// Rows are actual classes, columns predicted classes.
class ConfusionMatrix {
 public:
  ConfusionMatrix() = default;
  explicit ConfusionMatrix(std::size_t num_classes);
  /// Throws DataError unless `counts` is square and non-empty.
  static ConfusionMatrix from_counts(const std::vector<std::vector<std::uint64_t>>& counts);

  std::size_t num_classes() const noexcept { return k_; }
  std::uint64_t operator()(std::size_t actual, std::size_t predicted) const { return counts_[actual * k_ + predicted]; }
  void add(std::size_t actual, std::size_t predicted, std::uint64_t n = 1);

  std::uint64_t total() const;
  std::uint64_t row_sum(std::size_t actual) const;
  std::uint64_t col_sum(std::size_t predicted) const;
  std::vector<std::vector<std::uint64_t>> rows() const;

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  std::size_t k_ = 0;
  std::vector<std::uint64_t> counts_;
};

ConfusionMatrix confusion(std::span<const std::size_t> actual, std::span<const std::size_t> predicted,
                          std::size_t num_classes);

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::uint64_t support = 0;
  /// Set when the class was never predicted (precision reported as 0).
  bool empty_column = false;
  /// Set when the class never occurs (recall reported as 0).
  bool empty_row = false;
};

struct MetricsReport {
  double accuracy = 0.0;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  std::vector<ClassMetrics> per_class;
  ConfusionMatrix matrix;
};

/// Accuracy plus macro (unweighted) precision, recall and F1. Throws DataError
/// on an empty matrix.
MetricsReport metrics(const ConfusionMatrix& matrix);

/// `key: value` lines. Class names default to class indices.
std::string format_metrics(const MetricsReport& report, std::span<const std::string> labels = {});

}  // namespace magic
