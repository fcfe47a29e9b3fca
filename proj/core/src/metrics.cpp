// Copyright 2026 The magic-gat Authors
// SPDX-License-Identifier: Apache-2.0

#include "magic/metrics.hpp"

#include <cstdio>

#include "magic/error.hpp"

namespace magic {

ConfusionMatrix::ConfusionMatrix(std::size_t num_classes) : k_(num_classes), counts_(num_classes * num_classes, 0) {
  if (num_classes == 0) throw DataError("confusion matrix needs at least one class");
}

ConfusionMatrix ConfusionMatrix::from_counts(const std::vector<std::vector<std::uint64_t>>& counts) {
  if (counts.empty()) throw DataError("confusion matrix is empty");
  ConfusionMatrix m(counts.size());
  for (std::size_t a = 0; a < counts.size(); ++a) {
    if (counts[a].size() != counts.size()) {
      throw DataError("confusion matrix row " + std::to_string(a) + " has " + std::to_string(counts[a].size()) +
                      " entries, expected " + std::to_string(counts.size()));
    }
    for (std::size_t p = 0; p < counts.size(); ++p) m.add(a, p, counts[a][p]);
  }
  return m;
}

void ConfusionMatrix::add(std::size_t actual, std::size_t predicted, std::uint64_t n) {
  if (actual >= k_ || predicted >= k_) throw DataError("class index out of range for confusion matrix");
  counts_[actual * k_ + predicted] += n;
}

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t t = 0;
  for (auto c : counts_) t += c;
  return t;
}

std::uint64_t ConfusionMatrix::row_sum(std::size_t actual) const {
  std::uint64_t t = 0;
  for (std::size_t p = 0; p < k_; ++p) t += (*this)(actual, p);
  return t;
}

std::uint64_t ConfusionMatrix::col_sum(std::size_t predicted) const {
  std::uint64_t t = 0;
  for (std::size_t a = 0; a < k_; ++a) t += (*this)(a, predicted);
  return t;
}

std::vector<std::vector<std::uint64_t>> ConfusionMatrix::rows() const {
  std::vector<std::vector<std::uint64_t>> out(k_);
  for (std::size_t a = 0; a < k_; ++a) out[a].assign(counts_.begin() + a * k_, counts_.begin() + (a + 1) * k_);
  return out;
}

ConfusionMatrix confusion(std::span<const std::size_t> actual, std::span<const std::size_t> predicted,
                          std::size_t num_classes) {
  if (actual.size() != predicted.size()) {
    throw DataError("confusion: " + std::to_string(actual.size()) + " actual labels vs " +
                    std::to_string(predicted.size()) + " predictions");
  }
  ConfusionMatrix m(num_classes);
  for (std::size_t i = 0; i < actual.size(); ++i) m.add(actual[i], predicted[i]);
  return m;
}

MetricsReport metrics(const ConfusionMatrix& matrix) {
  const std::uint64_t total = matrix.total();
  if (matrix.num_classes() == 0 || total == 0) throw DataError("cannot compute metrics of an empty confusion matrix");
  MetricsReport r;
  r.matrix = matrix;
  const std::size_t k = matrix.num_classes();
  std::uint64_t trace = 0;
  for (std::size_t c = 0; c < k; ++c) {
    const double tp = static_cast<double>(matrix(c, c));
    trace += matrix(c, c);
    ClassMetrics cm;
    cm.support = matrix.row_sum(c);
    const std::uint64_t col = matrix.col_sum(c);
    cm.empty_column = col == 0;
    cm.empty_row = cm.support == 0;
    cm.precision = cm.empty_column ? 0.0 : tp / static_cast<double>(col);
    cm.recall = cm.empty_row ? 0.0 : tp / static_cast<double>(cm.support);
    const double pr = cm.precision + cm.recall;
    cm.f1 = pr > 0.0 ? 2.0 * cm.precision * cm.recall / pr : 0.0;
    r.macro_precision += cm.precision;
    r.macro_recall += cm.recall;
    r.macro_f1 += cm.f1;
    r.per_class.push_back(cm);
  }
  r.accuracy = static_cast<double>(trace) / static_cast<double>(total);
  r.macro_precision /= static_cast<double>(k);
  r.macro_recall /= static_cast<double>(k);
  r.macro_f1 /= static_cast<double>(k);
  return r;
}

std::string format_metrics(const MetricsReport& report, std::span<const std::string> labels) {
  auto line = [](std::string& out, const std::string& key, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    out += key + ": " + buf + "\n";
  };
  std::string out;
  line(out, "accuracy", report.accuracy);
  line(out, "macro_precision", report.macro_precision);
  line(out, "macro_recall", report.macro_recall);
  line(out, "macro_f1", report.macro_f1);
  for (std::size_t c = 0; c < report.per_class.size(); ++c) {
    const std::string name = c < labels.size() ? labels[c] : std::to_string(c);
    const ClassMetrics& cm = report.per_class[c];
    line(out, "class[" + name + "].precision", cm.precision);
    line(out, "class[" + name + "].recall", cm.recall);
    line(out, "class[" + name + "].f1", cm.f1);
    out += "class[" + name + "].support: " + std::to_string(cm.support) + "\n";
    if (cm.empty_column) out += "class[" + name + "].flag: never predicted, precision set to 0\n";
    if (cm.empty_row) out += "class[" + name + "].flag: no samples, recall set to 0\n";
  }
  return out;
}

}  // namespace magic
