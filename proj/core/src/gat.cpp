// Copyright 2026 The magic-gat Authors
// SPDX-License-Identifier: Apache-2.0

#include "magic/gat.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "magic/error.hpp"

namespace magic {

void GatLayerParams::validate() const {
  if (weights.empty()) throw ConfigError("attention layer needs at least one head");
  if (attention.size() != weights.size()) throw ShapeError("attention vectors do not match head count");
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (!weights[k].same_shape(weights[0])) throw ShapeError("attention heads disagree in weight shape");
    if (attention[k].rows() != 2 * head_dim() || attention[k].cols() != 1) {
      throw ShapeError("attention vector of head " + std::to_string(k) + " must be " +
                       std::to_string(2 * head_dim()) + "x1, got " + attention[k].shape_string());
    }
  }
  if (!(topk_ratio > 0.0 && topk_ratio <= 1.0)) throw ConfigError("topk ratio must lie in (0, 1]");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ConfigError("dropout rate must lie in [0, 1)");
  if (!(leaky_slope > 0.0) || !(elu_alpha > 0.0)) throw ConfigError("activation slopes must be positive");
}

GatLayerParams GatLayerParams::glorot(std::size_t input_dim, std::size_t head_dim, std::size_t heads,
                                      Aggregation aggregation, Rng& rng) {
  GatLayerParams p;
  p.aggregation = aggregation;
  const double w_limit = std::sqrt(6.0 / static_cast<double>(input_dim + head_dim));
  const double a_limit = std::sqrt(6.0 / static_cast<double>(2 * head_dim + 1));
  for (std::size_t k = 0; k < heads; ++k) {
    Tensor w(input_dim, head_dim);
    for (double& v : w.data()) v = rng.uniform(-w_limit, w_limit);
    Tensor a(2 * head_dim, 1);
    for (double& v : a.data()) v = rng.uniform(-a_limit, a_limit);
    p.weights.push_back(std::move(w));
    p.attention.push_back(std::move(a));
  }
  return p;
}

// ---- plain primitives ----

namespace {

Tensor rows_of(const Tensor& t, std::size_t begin, std::size_t end) {
  std::vector<double> data(t.data().begin() + begin * t.cols(), t.data().begin() + end * t.cols());
  return Tensor(end - begin, t.cols(), std::move(data));
}

void check_edge_values(const Topology& topology, std::span<const double> values, const char* what) {
  if (values.size() != topology.num_entries()) {
    throw ShapeError(std::string(what) + ": expected " + std::to_string(topology.num_entries()) +
                     " per-edge values, got " + std::to_string(values.size()));
  }
}

// Indices of `candidates` ordered by descending score, then ascending rank, then index.
void order_by_score(std::vector<std::size_t>& candidates, auto score, const std::vector<std::size_t>& rank) {
  std::sort(candidates.begin(), candidates.end(), [&](std::size_t a, std::size_t b) {
    const double sa = score(a), sb = score(b);
    if (sa != sb) return sa > sb;
    if (rank[a] != rank[b]) return rank[a] < rank[b];
    return a < b;
  });
}

}  // namespace

std::vector<double> attention_logits(const Topology& topology, const Tensor& h, const Tensor& weight,
                                     const Tensor& attention, double leaky_slope) {
  if (h.cols() != weight.rows()) {
    throw ShapeError("attention_logits: features " + h.shape_string() + " vs weight " + weight.shape_string());
  }
  if (h.rows() != topology.num_nodes) throw ShapeError("attention_logits: feature rows do not match topology");
  const std::size_t d = weight.cols();
  if (attention.rows() != 2 * d || attention.cols() != 1) throw ShapeError("attention_logits: bad attention vector");
  const Tensor wh = matmul_plain(h, weight);
  const Tensor s_src = matmul_plain(wh, rows_of(attention, 0, d));
  const Tensor s_dst = matmul_plain(wh, rows_of(attention, d, 2 * d));
  std::vector<double> e(topology.num_entries());
  for (std::size_t i = 0; i < topology.num_nodes; ++i) {
    for (std::size_t k = topology.row_ptr[i]; k < topology.row_ptr[i + 1]; ++k) {
      const double z = s_src[i] + s_dst[topology.col_idx[k]];
      e[k] = z >= 0.0 ? z : leaky_slope * z;
    }
  }
  return e;
}

std::vector<double> normalize_attention(const Topology& topology, std::span<const double> logits) {
  check_edge_values(topology, logits, "normalize_attention");
  std::vector<double> alpha(logits.size(), 0.0);
  for (std::size_t i = 0; i < topology.num_nodes; ++i) {
    const std::size_t lo = topology.row_ptr[i], hi = topology.row_ptr[i + 1];
    if (lo == hi) continue;
    const double mx = *std::max_element(logits.begin() + lo, logits.begin() + hi);
    double total = 0.0;
    for (std::size_t k = lo; k < hi; ++k) {
      alpha[k] = std::exp(logits[k] - mx);
      total += alpha[k];
    }
    for (std::size_t k = lo; k < hi; ++k) alpha[k] /= total;
  }
  return alpha;
}

std::size_t topk_count(std::size_t n, double ratio) {
  if (n == 0) return 0;
  // The small slack keeps ratio * n that lands on an integer from rounding up.
  const auto k = static_cast<std::size_t>(std::ceil(ratio * static_cast<double>(n) - 1e-9));
  return std::clamp<std::size_t>(k, 1, n);
}

std::vector<unsigned char> topk_keep(const Topology& topology, std::span<const double> alpha, double ratio) {
  check_edge_values(topology, alpha, "topk_keep");
  std::vector<unsigned char> keep(alpha.size(), 0);
  std::vector<std::size_t> entries;
  for (std::size_t i = 0; i < topology.num_nodes; ++i) {
    const std::size_t lo = topology.row_ptr[i], hi = topology.row_ptr[i + 1];
    const std::size_t k = topk_count(hi - lo, ratio);
    entries.resize(hi - lo);
    std::iota(entries.begin(), entries.end(), lo);
    std::sort(entries.begin(), entries.end(), [&](std::size_t a, std::size_t b) {
      if (alpha[a] != alpha[b]) return alpha[a] > alpha[b];
      const std::size_t ra = topology.rank[topology.col_idx[a]], rb = topology.rank[topology.col_idx[b]];
      if (ra != rb) return ra < rb;
      return topology.col_idx[a] < topology.col_idx[b];
    });
    for (std::size_t t = 0; t < k; ++t) keep[entries[t]] = 1;
  }
  return keep;
}

std::vector<unsigned char> node_pool_keep(const Topology& topology, std::span<const double> alpha, double ratio) {
  check_edge_values(topology, alpha, "node_pool_keep");
  std::vector<double> received(topology.num_nodes, 0.0);
  for (std::size_t e = 0; e < alpha.size(); ++e) received[topology.col_idx[e]] += alpha[e];

  std::vector<unsigned char> kept_node(topology.num_nodes, 0);
  for (std::size_t g = 0; g < topology.num_graphs(); ++g) {
    const std::size_t lo = topology.graph_offsets[g], hi = topology.graph_end(g);
    std::vector<std::size_t> nodes(hi - lo);
    std::iota(nodes.begin(), nodes.end(), lo);
    order_by_score(nodes, [&](std::size_t v) { return received[v]; }, topology.rank);
    const std::size_t k = topk_count(nodes.size(), ratio);
    for (std::size_t t = 0; t < k; ++t) kept_node[nodes[t]] = 1;
  }
  std::vector<unsigned char> keep(alpha.size(), 0);
  for (std::size_t i = 0; i < topology.num_nodes; ++i)
    for (std::size_t e = topology.row_ptr[i]; e < topology.row_ptr[i + 1]; ++e)
      keep[e] = (kept_node[topology.col_idx[e]] != 0 || topology.col_idx[e] == i) ? 1 : 0;
  return keep;
}

std::vector<double> topk_mask(const Topology& topology, std::span<const double> alpha, double ratio) {
  const std::vector<unsigned char> keep = topk_keep(topology, alpha, ratio);
  std::vector<double> out(alpha.size(), 0.0);
  for (std::size_t i = 0; i < topology.num_nodes; ++i) {
    const std::size_t lo = topology.row_ptr[i], hi = topology.row_ptr[i + 1];
    if (std::all_of(keep.begin() + lo, keep.begin() + hi, [](unsigned char k) { return k != 0; })) {
      std::copy(alpha.begin() + lo, alpha.begin() + hi, out.begin() + lo);
      continue;
    }
    double total = 0.0;
    for (std::size_t e = lo; e < hi; ++e)
      if (keep[e]) total += alpha[e];
    for (std::size_t e = lo; e < hi; ++e) out[e] = keep[e] ? alpha[e] / total : 0.0;
  }
  return out;
}

Tensor apply_dropout(const Tensor& t, double rate, Rng& rng, bool training) {
  if (!(rate >= 0.0 && rate < 1.0)) throw ConfigError("dropout rate must lie in [0, 1)");
  if (!training || rate == 0.0) return t;
  Tensor out = t;
  const double keep_scale = 1.0 / (1.0 - rate);
  for (double& v : out.data()) v = rng.uniform() < rate ? 0.0 : v * keep_scale;
  return out;
}

Var dropout(const Var& x, double rate, Rng& rng, bool training) {
  if (!(rate >= 0.0 && rate < 1.0)) throw ConfigError("dropout rate must lie in [0, 1)");
  if (!training || rate == 0.0) return x;
  Tensor factor(x.rows(), x.cols(), 1.0);
  return mul_const(x, apply_dropout(factor, rate, rng, true));
}

// ---- layer ----

GatLayerVars bind_layer(Tape& tape, const GatLayerParams& params, bool trainable) {
  GatLayerVars vars;
  for (std::size_t k = 0; k < params.heads(); ++k) {
    if (trainable) {
      vars.push_back({tape.parameter(params.weights[k]), tape.parameter(params.attention[k])});
    } else {
      vars.push_back({tape.constant(params.weights[k]), tape.constant(params.attention[k])});
    }
  }
  return vars;
}

namespace {

std::vector<unsigned char> pooling_keep(const GatLayerParams& p, const Topology& topology,
                                        std::span<const double> alpha) {
  return p.pooling == PoolingMode::kNode ? node_pool_keep(topology, alpha, p.topk_ratio)
                                         : topk_keep(topology, alpha, p.topk_ratio);
}

std::vector<double> to_edges(const Topology& topology, const Tensor& dense) {
  std::vector<double> out(topology.num_entries());
  for (std::size_t i = 0; i < topology.num_nodes; ++i)
    for (std::size_t e = topology.row_ptr[i]; e < topology.row_ptr[i + 1]; ++e) out[e] = dense(i, topology.col_idx[e]);
  return out;
}

Mask to_mask(const Topology& topology, std::span<const unsigned char> keep) {
  Mask m(topology.num_nodes, topology.num_nodes);
  for (std::size_t i = 0; i < topology.num_nodes; ++i)
    for (std::size_t e = topology.row_ptr[i]; e < topology.row_ptr[i + 1]; ++e)
      if (keep[e]) m.set(i, topology.col_idx[e], true);
  return m;
}

}  // namespace

Var gat_layer_forward(const GatLayerParams& params, const GatLayerVars& vars, const Var& h,
                      const Topology& topology, const LayerContext& context, AttentionTrace* trace) {
  params.validate();
  if (vars.size() != params.heads()) throw ShapeError("bound variables do not match head count");
  if (h.cols() != params.input_dim()) {
    throw ShapeError("attention layer expects " + std::to_string(params.input_dim()) + " input features, got " +
                     std::to_string(h.cols()));
  }
  if (h.rows() != topology.num_nodes) throw ShapeError("feature rows do not match topology node count");
  const bool dropping = context.training && params.dropout_rate > 0.0;
  if (dropping && context.rng == nullptr) throw ConfigError("training-mode dropout needs a random generator");

  const bool pool = params.apply_topk && params.topk_ratio < 1.0;
  const bool dense = context.path == AttentionPath::kDense ||
                     (context.path == AttentionPath::kAuto && topology.num_nodes <= kDenseNodeLimit);
  const std::size_t d = params.head_dim();
  const Var x = dropping ? dropout(h, params.dropout_rate, *context.rng, true) : h;

  Mask adjacency_mask;
  std::vector<std::size_t> entry_rows;
  if (dense) {
    adjacency_mask = topology.dense_mask();
  } else {
    entry_rows = topology.entry_rows();
  }
  if (trace) {
    trace->normalized.clear();
    trace->pooled.clear();
  }

  std::vector<Var> messages;
  for (std::size_t k = 0; k < params.heads(); ++k) {
    const Var wh = matmul(x, vars[k].weight);
    const Var s_src = matmul(wh, slice_rows(vars[k].attention, 0, d));
    const Var s_dst = matmul(wh, slice_rows(vars[k].attention, d, 2 * d));
    Var message;
    if (dense) {
      const Var logits = leaky_relu(outer_add(s_src, s_dst), params.leaky_slope);
      Var alpha = softmax_masked(logits, adjacency_mask);
      const std::vector<double> normalized = to_edges(topology, alpha.value());
      if (pool) alpha = mask_renormalize(alpha, to_mask(topology, pooling_keep(params, topology, normalized)));
      if (trace) {
        trace->normalized.push_back(normalized);
        trace->pooled.push_back(to_edges(topology, alpha.value()));
      }
      if (dropping) alpha = dropout(alpha, params.dropout_rate, *context.rng, true);
      message = matmul(alpha, wh);
    } else {
      const Var logits = leaky_relu(add(gather_rows(s_src, entry_rows), gather_rows(s_dst, topology.col_idx)),
                                    params.leaky_slope);
      Var alpha = segment_softmax(logits, topology.row_ptr);
      const std::vector<double> normalized(alpha.value().data().begin(), alpha.value().data().end());
      if (pool) {
        alpha = segment_renormalize(alpha, pooling_keep(params, topology, normalized), topology.row_ptr);
      }
      if (trace) {
        trace->normalized.push_back(normalized);
        trace->pooled.emplace_back(alpha.value().data().begin(), alpha.value().data().end());
      }
      if (dropping) alpha = dropout(alpha, params.dropout_rate, *context.rng, true);
      message = spmm(alpha, topology.row_ptr, topology.col_idx, wh);
    }
    messages.push_back(message);
  }

  Var combined;
  if (params.aggregation == Aggregation::kConcat) {
    combined = messages.size() == 1 ? messages[0] : concat_cols(messages);
  } else {
    combined = messages[0];
    for (std::size_t k = 1; k < messages.size(); ++k) combined = add(combined, messages[k]);
    if (messages.size() > 1) combined = scale(combined, 1.0 / static_cast<double>(messages.size()));
  }
  return elu(combined, params.elu_alpha);
}

}  // namespace magic
