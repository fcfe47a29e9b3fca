// Copyright 2026 The magic-gat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "magic/autodiff.hpp"
#include "magic/gat.hpp"
#include "magic/graph.hpp"
#include "magic/tensor.hpp"

namespace magic {

/// Which layers apply top-k coefficient pooling.
enum class TopkScope { kEveryLayer, kLastLayer };

struct ModelConfig {
  std::size_t layer_min = 1;
  std::size_t layer_max = 4;
  std::size_t heads = 4;
  std::size_t hidden_dim = 64;
  double topk_ratio = 0.8;
  double dropout = 0.2;
  double leaky_slope = 0.2;
  double elu_alpha = 1.0;
  bool include_image = true;
  bool multi_head_enabled = true;
  /// false stacks layers plainly: G_m = F_m(G_{m-1}).
  bool residual = true;
  PoolingMode pooling = PoolingMode::kCoefficient;
  TopkScope topk_scope = TopkScope::kEveryLayer;
  AttentionPath attention_path = AttentionPath::kAuto;
  std::uint64_t seed = 0;

  std::size_t effective_heads() const noexcept { return multi_head_enabled ? heads : 1; }
  /// Throws ConfigError. hidden_dim must split evenly across the heads.
  void validate() const;
};

enum class Variant { kFull, kNoImage, kNoMultihead, kNoFusion };

Variant parse_variant(std::string_view name);
std::string_view variant_name(Variant v);
/// Idempotent: applying a variant twice equals applying it once.
ModelConfig ablation_variant(ModelConfig config, Variant variant);

struct MagicModel {
  ModelConfig config;
  std::size_t input_dim = 0;
  std::size_t num_classes = 0;
  Tensor input_weight;  // d x hidden
  Tensor input_bias;    // 1 x hidden
  std::vector<GatLayerParams> layers;
  Tensor classifier_weight;  // hidden x classes
  Tensor classifier_bias;    // 1 x classes

  std::size_t depth() const noexcept { return layers.size(); }

  /// Glorot-initialized model of the given depth. The generator is seeded
  /// from config.seed alone, so candidates of different depth share their
  /// leading parameters.
  static MagicModel init(const ModelConfig& config, std::size_t input_dim, std::size_t num_classes,
                         std::size_t depth);
};

struct NamedTensor {
  std::string name;
  Tensor* value;
};
struct ConstNamedTensor {
  std::string name;
  const Tensor* value;
};
/// Every trainable tensor in a fixed order: input, layers (by head), classifier.
std::vector<NamedTensor> parameters(MagicModel& model);
std::vector<ConstNamedTensor> parameters(const MagicModel& model);
std::vector<std::string> parameter_names(const MagicModel& model);

struct ModelVars {
  Var input_weight;
  Var input_bias;
  std::vector<GatLayerVars> layers;
  Var classifier_weight;
  Var classifier_bias;

  /// Same order as parameters().
  std::vector<Var> flat() const;
};

ModelVars bind_model(Tape& tape, const MagicModel& model, bool trainable);

struct ForwardContext {
  bool training = false;
  Rng* rng = nullptr;
  /// Overrides config.attention_path when not kAuto.
  AttentionPath path = AttentionPath::kAuto;
  /// Receives one trace per layer when non-null.
  std::vector<AttentionTrace>* traces = nullptr;
};

/// x W_in + b_in.
Var project_input(const ModelVars& vars, const Var& features);
/// The residual stack over projected node features.
Var encode_nodes(const MagicModel& model, const ModelVars& vars, const Var& projected, const Topology& topology,
                 const ForwardContext& context);
/// Mean of node rows per graph, then the linear classifier.
Var readout_logits(const ModelVars& vars, const Var& nodes, const Topology& topology);
Var forward_logits(const MagicModel& model, const ModelVars& vars, const Var& features, const Topology& topology,
                   const ForwardContext& context);

struct ForwardResult {
  Tensor logits;         // graphs x classes
  Tensor probabilities;  // softmax of logits
};

/// Untracked evaluation-mode forward pass.
ForwardResult forward(const MagicModel& model, const GraphBatch& batch, AttentionPath path = AttentionPath::kAuto);

/// Mean cross-entropy of probability rows against labels, with p floored at
/// 1e-12 before the log.
double cross_entropy_loss(const Tensor& probabilities, std::span<const std::size_t> labels);

}  // namespace magic
