// Copyright 2026 The magic-gat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "magic/metrics.hpp"
#include "magic/training.hpp"

namespace magic {

using ReportJson = nlohmann::ordered_json;

ReportJson metrics_json(const MetricsReport& report, std::span<const std::string> labels = {});
ReportJson confusion_json(const ConfusionMatrix& matrix);
ReportJson history_json(std::span<const EpochRecord> history);
/// Non-diverged candidates only, in depth order.
ReportJson search_json(std::span<const SearchEntry> entries);
ReportJson diverged_json(std::span<const SearchEntry> entries);

/// Accepts a bare square array of counts or an object with a "confusion"
/// array and optional "labels". Throws FormatError/DataError.
ConfusionMatrix confusion_from_json(const nlohmann::json& doc, std::vector<std::string>* labels = nullptr);

/// Current UTC time as ISO-8601; only report headers carry it.
std::string utc_timestamp();

}  // namespace magic
