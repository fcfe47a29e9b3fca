// Copyright 2026 The magic-gat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "magic/autodiff.hpp"
#include "magic/graph.hpp"
#include "magic/rng.hpp"
#include "magic/tensor.hpp"

namespace magic {

enum class Aggregation { kConcat, kAverage };

/// kCoefficient keeps the top ceil(rho * |N_i|) coefficients of every node's
/// attention row. kNode keeps the top ceil(rho * |V_g|) nodes of each graph by
/// total received attention and drops edges into the rest (self-loops stay).
enum class PoolingMode { kCoefficient, kNode };

/// Graphs up to kDenseNodeLimit nodes use dense masked attention; larger ones
/// (typically merged batches) use CSR neighbour lists.
enum class AttentionPath { kAuto, kDense, kSparse };
inline constexpr std::size_t kDenseNodeLimit = 64;

/// One multi-head attention layer: per head k a weight W^k (d_in x d_head) and
/// an attention vector a^k (2 d_head x 1) scoring [W h_i || W h_j].
struct GatLayerParams {
  std::vector<Tensor> weights;
  std::vector<Tensor> attention;
  double leaky_slope = 0.2;
  double elu_alpha = 1.0;
  double topk_ratio = 0.8;
  double dropout_rate = 0.2;
  Aggregation aggregation = Aggregation::kConcat;
  PoolingMode pooling = PoolingMode::kCoefficient;
  bool apply_topk = true;

  std::size_t heads() const noexcept { return weights.size(); }
  std::size_t input_dim() const { return weights.at(0).rows(); }
  std::size_t head_dim() const { return weights.at(0).cols(); }
  std::size_t output_dim() const {
    return aggregation == Aggregation::kConcat ? heads() * head_dim() : head_dim();
  }
  /// Throws ShapeError/ConfigError when heads disagree in shape or a rate is
  /// outside its range.
  void validate() const;

  /// Glorot-uniform weights and attention vectors.
  static GatLayerParams glorot(std::size_t input_dim, std::size_t head_dim, std::size_t heads,
                               Aggregation aggregation, Rng& rng);
};

// Plain (untracked) attention primitives over a CSR topology. Per-edge values
// are aligned with topology.col_idx.

/// e_ij = LeakyReLU(a^T [W h_i || W h_j]) for one head.
std::vector<double> attention_logits(const Topology& topology, const Tensor& h, const Tensor& weight,
                                     const Tensor& attention, double leaky_slope);
/// Softmax of each node's logits over its neighbourhood.
std::vector<double> normalize_attention(const Topology& topology, std::span<const double> logits);
/// k = ceil(ratio * n), at least 1 and at most n.
std::size_t topk_count(std::size_t n, double ratio);
/// 1 for retained entries. Ties are broken by neighbour rank, then index.
std::vector<unsigned char> topk_keep(const Topology& topology, std::span<const double> alpha, double ratio);
std::vector<unsigned char> node_pool_keep(const Topology& topology, std::span<const double> alpha, double ratio);
/// topk_keep followed by renormalizing the survivors of every row to sum to 1.
std::vector<double> topk_mask(const Topology& topology, std::span<const double> alpha, double ratio);

/// Inverted dropout: in training mode each entry is zeroed with probability
/// `rate` and survivors scaled by 1/(1-rate); identity otherwise.
Tensor apply_dropout(const Tensor& t, double rate, Rng& rng, bool training);
Var dropout(const Var& x, double rate, Rng& rng, bool training);

struct GatHeadVars {
  Var weight;
  Var attention;
};
using GatLayerVars = std::vector<GatHeadVars>;

/// Records the layer's parameters on `tape`, as gradient leaves if `trainable`.
GatLayerVars bind_layer(Tape& tape, const GatLayerParams& params, bool trainable);

struct LayerContext {
  bool training = false;
  /// Required when training with a non-zero dropout rate.
  Rng* rng = nullptr;
  AttentionPath path = AttentionPath::kAuto;
};

/// Per-head attention coefficients observed during a forward pass, as CSR
/// per-edge values (before and after top-k pooling, both before dropout).
struct AttentionTrace {
  std::vector<std::vector<double>> normalized;
  std::vector<std::vector<double>> pooled;
};

/// h' = ELU(aggregate_k sum_j alpha^k_ij W^k h_j), aggregate = concat or mean.
/// Dropout is applied to the layer input and to the attention coefficients.
Var gat_layer_forward(const GatLayerParams& params, const GatLayerVars& vars, const Var& h,
                      const Topology& topology, const LayerContext& context, AttentionTrace* trace = nullptr);

}  // namespace magic
