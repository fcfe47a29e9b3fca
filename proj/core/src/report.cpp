// Copyright 2026 The magic-gat Authors
// SPDX-License-Identifier: Apache-2.0

#include "magic/report.hpp"

#include <chrono>
#include <ctime>

#include "magic/error.hpp"

namespace magic {

ReportJson metrics_json(const MetricsReport& report, std::span<const std::string> labels) {
  ReportJson j;
  j["accuracy"] = report.accuracy;
  j["macro_precision"] = report.macro_precision;
  j["macro_recall"] = report.macro_recall;
  j["macro_f1"] = report.macro_f1;
  ReportJson per_class = ReportJson::array();
  for (std::size_t c = 0; c < report.per_class.size(); ++c) {
    const ClassMetrics& cm = report.per_class[c];
    ReportJson e;
    e["label"] = c < labels.size() ? labels[c] : std::to_string(c);
    e["precision"] = cm.precision;
    e["recall"] = cm.recall;
    e["f1"] = cm.f1;
    e["support"] = cm.support;
    ReportJson flags = ReportJson::array();
    if (cm.empty_column) flags.push_back("never_predicted");
    if (cm.empty_row) flags.push_back("no_samples");
    e["flags"] = flags;
    per_class.push_back(e);
  }
  j["per_class"] = per_class;
  return j;
}

ReportJson confusion_json(const ConfusionMatrix& matrix) { return ReportJson(matrix.rows()); }

ReportJson history_json(std::span<const EpochRecord> history) {
  ReportJson out = ReportJson::array();
  for (const EpochRecord& r : history) {
    ReportJson e;
    e["epoch"] = r.epoch;
    e["train_loss"] = r.train_loss;
    e["val_accuracy"] = r.val_accuracy;
    if (r.train_accuracy) e["train_accuracy"] = *r.train_accuracy;
    out.push_back(e);
  }
  return out;
}

ReportJson search_json(std::span<const SearchEntry> entries) {
  ReportJson out = ReportJson::array();
  for (const SearchEntry& s : entries) {
    if (s.diverged) continue;
    ReportJson e;
    e["n"] = s.n;
    e["val_accuracy"] = s.val_accuracy;
    e["best_epoch"] = s.best_epoch;
    out.push_back(e);
  }
  return out;
}

ReportJson diverged_json(std::span<const SearchEntry> entries) {
  ReportJson out = ReportJson::array();
  for (const SearchEntry& s : entries) {
    if (!s.diverged) continue;
    ReportJson e;
    e["n"] = s.n;
    e["message"] = s.message;
    out.push_back(e);
  }
  return out;
}

ConfusionMatrix confusion_from_json(const nlohmann::json& doc, std::vector<std::string>* labels) {
  const nlohmann::json* counts = &doc;
  if (doc.is_object()) {
    const auto it = doc.find("confusion");
    if (it == doc.end()) throw FormatError("confusion file: object has no 'confusion' field");
    counts = &*it;
    if (labels) {
      if (const auto l = doc.find("labels"); l != doc.end()) {
        if (!l->is_array()) throw FormatError("confusion file: 'labels' must be an array of strings");
        for (const auto& name : *l) {
          if (!name.is_string()) throw FormatError("confusion file: 'labels' must be an array of strings");
          labels->push_back(name.get<std::string>());
        }
      }
    }
  }
  if (!counts->is_array() || counts->empty()) throw FormatError("confusion file: expected a non-empty array of rows");
  std::vector<std::vector<std::uint64_t>> rows;
  for (const auto& row : *counts) {
    if (!row.is_array()) throw FormatError("confusion file: every row must be an array");
    std::vector<std::uint64_t> r;
    for (const auto& v : row) {
      if (!v.is_number_unsigned()) throw FormatError("confusion file: counts must be non-negative integers");
      r.push_back(v.get<std::uint64_t>());
    }
    rows.push_back(std::move(r));
  }
  ConfusionMatrix m = ConfusionMatrix::from_counts(rows);
  if (labels && !labels->empty() && labels->size() != m.num_classes()) {
    throw DataError("confusion file: " + std::to_string(labels->size()) + " labels for " +
                    std::to_string(m.num_classes()) + " classes");
  }
  return m;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace magic
