// Copyright 2026 The magic-gat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "magic/graph.hpp"
#include "magic/metrics.hpp"
#include "magic/model.hpp"

namespace magic {

struct TrainConfig {
  double learning_rate = 0.002;
  std::size_t batch_size = 128;
  std::size_t epochs = 100;
  /// Stop after this many epochs without a validation improvement; 0 disables.
  std::size_t patience = 20;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  /// Global gradient-norm ceiling; 0 disables clipping.
  double clip_norm = 5.0;
  std::uint64_t seed = 0;
  /// Each batch is split into this many contiguous shards whose gradients are
  /// summed in shard order, weighted by shard size.
  std::size_t shards = 1;
  /// Also record accuracy on the training graphs after every epoch.
  bool track_train_accuracy = false;

  void validate() const;
};

struct AdamState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  std::uint64_t t = 0;
};

/// One bias-corrected Adam update. Throws NumericError naming the first
/// parameter whose gradient is not finite; nothing is updated in that case.
void adam_step(std::span<const NamedTensor> params, std::span<const Tensor> grads, AdamState& state,
               const TrainConfig& config);

/// Scales `grads` in place so their joint L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
double clip_global_norm(std::span<Tensor> grads, double max_norm);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_accuracy = 0.0;
  std::optional<double> train_accuracy;
};

struct TrainResult {
  MagicModel model;
  std::vector<EpochRecord> history;
  /// 0 when no epoch ran and the initial parameters were returned.
  std::size_t best_epoch = 0;
  double best_val_accuracy = 0.0;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Adam with seeded per-epoch shuffling; keeps the parameters of the epoch with
/// the highest validation accuracy (earliest on ties). A non-finite loss or
/// gradient throws NumericError mentioning the epoch and batch.
TrainResult train(MagicModel model, std::span<const InteractionGraph> train_set,
                  std::span<const InteractionGraph> val_set, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

/// Evaluation-mode class probabilities, graphs processed in chunks of `chunk`.
Tensor predict_probabilities(const MagicModel& model, std::span<const InteractionGraph> graphs,
                             std::size_t chunk = 128);
std::vector<std::size_t> predict(const MagicModel& model, std::span<const InteractionGraph> graphs);
double accuracy(const MagicModel& model, std::span<const InteractionGraph> graphs);
MetricsReport evaluate(const MagicModel& model, std::span<const InteractionGraph> graphs);

struct SearchEntry {
  std::size_t n = 0;
  bool diverged = false;
  double val_accuracy = 0.0;
  std::size_t best_epoch = 0;
  std::string message;
};

/// Highest validation accuracy among non-diverged entries, smallest n on ties.
std::optional<std::size_t> select_best(std::span<const SearchEntry> entries);

struct SearchResult {
  std::size_t best_n = 0;
  TrainResult best;
  std::vector<SearchEntry> entries;
};

using SearchCallback = std::function<void(std::size_t n, const EpochRecord&)>;

/// Trains one candidate per depth in [layer_min, layer_max] with identical
/// seeds and budgets. Throws NumericError when every candidate diverges.
SearchResult search_layers(const ModelConfig& model_config, std::size_t input_dim, std::size_t num_classes,
                           std::span<const InteractionGraph> train_set, std::span<const InteractionGraph> val_set,
                           const TrainConfig& config, const SearchCallback& on_epoch = {});

}  // namespace magic
