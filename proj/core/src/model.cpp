// Copyright 2026 The magic-gat Authors
// SPDX-License-Identifier: Apache-2.0

#include "magic/model.hpp"

#include <algorithm>
#include <cmath>

#include "magic/error.hpp"

namespace magic {

void ModelConfig::validate() const {
  if (layer_min < 1) throw ConfigError("layer_min must be at least 1");
  if (layer_min > layer_max) throw ConfigError("layer_min must not exceed layer_max");
  if (heads < 1) throw ConfigError("heads must be at least 1");
  if (hidden_dim < 1) throw ConfigError("hidden_dim must be at least 1");
  if (hidden_dim % effective_heads() != 0) {
    throw ConfigError("hidden_dim " + std::to_string(hidden_dim) + " is not divisible by " +
                      std::to_string(effective_heads()) + " heads");
  }
  if (!(topk_ratio > 0.0 && topk_ratio <= 1.0)) throw ConfigError("topk_ratio must lie in (0, 1]");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
  if (!(leaky_slope > 0.0 && std::isfinite(leaky_slope))) throw ConfigError("leaky_slope must be finite and positive");
  if (!(elu_alpha > 0.0 && std::isfinite(elu_alpha))) throw ConfigError("elu_alpha must be finite and positive");
}

Variant parse_variant(std::string_view name) {
  if (name == "full") return Variant::kFull;
  if (name == "no_image") return Variant::kNoImage;
  if (name == "no_multihead") return Variant::kNoMultihead;
  if (name == "no_fusion") return Variant::kNoFusion;
  throw ConfigError("unknown variant '" + std::string(name) + "' (expected full, no_image, no_multihead, no_fusion)");
}

std::string_view variant_name(Variant v) {
  switch (v) {
    case Variant::kFull: return "full";
    case Variant::kNoImage: return "no_image";
    case Variant::kNoMultihead: return "no_multihead";
    case Variant::kNoFusion: return "no_fusion";
  }
  return "full";
}

ModelConfig ablation_variant(ModelConfig config, Variant variant) {
  switch (variant) {
    case Variant::kFull: break;
    case Variant::kNoImage: config.include_image = false; break;
    case Variant::kNoMultihead: config.multi_head_enabled = false; break;
    case Variant::kNoFusion: config.residual = false; break;
  }
  return config;
}

MagicModel MagicModel::init(const ModelConfig& config, std::size_t input_dim, std::size_t num_classes,
                            std::size_t depth) {
  config.validate();
  if (input_dim == 0) throw ConfigError("input dimension must be positive");
  if (num_classes < 2) throw ConfigError("at least two classes are required");
  if (depth < 1) throw ConfigError("model depth must be at least 1");

  Rng rng(derive_seed({config.seed, 0x6d61676963ULL}));
  auto glorot = [&rng](std::size_t fan_in, std::size_t fan_out) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Tensor t(fan_in, fan_out);
    for (double& v : t.data()) v = rng.uniform(-limit, limit);
    return t;
  };

  MagicModel m;
  m.config = config;
  m.input_dim = input_dim;
  m.num_classes = num_classes;
  const std::size_t hidden = config.hidden_dim;
  const std::size_t heads = config.effective_heads();
  m.input_weight = glorot(input_dim, hidden);
  m.input_bias = Tensor(1, hidden);
  for (std::size_t l = 0; l < depth; ++l) {
    const bool last = l + 1 == depth;
    GatLayerParams p = last ? GatLayerParams::glorot(hidden, hidden, heads, Aggregation::kAverage, rng)
                            : GatLayerParams::glorot(hidden, hidden / heads, heads, Aggregation::kConcat, rng);
    p.leaky_slope = config.leaky_slope;
    p.elu_alpha = config.elu_alpha;
    p.topk_ratio = config.topk_ratio;
    p.dropout_rate = config.dropout;
    p.pooling = config.pooling;
    p.apply_topk = config.topk_scope == TopkScope::kEveryLayer || last;
    m.layers.push_back(std::move(p));
  }
  m.classifier_weight = glorot(hidden, num_classes);
  m.classifier_bias = Tensor(1, num_classes);
  return m;
}

namespace {

template <typename Model, typename Visit>
void visit_parameters(Model& model, Visit visit) {
  visit(std::string("input.weight"), model.input_weight);
  visit(std::string("input.bias"), model.input_bias);
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    for (std::size_t k = 0; k < model.layers[l].heads(); ++k) {
      const std::string prefix = "layer" + std::to_string(l) + ".head" + std::to_string(k);
      visit(prefix + ".weight", model.layers[l].weights[k]);
      visit(prefix + ".attention", model.layers[l].attention[k]);
    }
  }
  visit(std::string("classifier.weight"), model.classifier_weight);
  visit(std::string("classifier.bias"), model.classifier_bias);
}

}  // namespace

std::vector<NamedTensor> parameters(MagicModel& model) {
  std::vector<NamedTensor> out;
  visit_parameters(model, [&out](std::string name, Tensor& t) { out.push_back({std::move(name), &t}); });
  return out;
}

std::vector<ConstNamedTensor> parameters(const MagicModel& model) {
  std::vector<ConstNamedTensor> out;
  visit_parameters(model, [&out](std::string name, const Tensor& t) { out.push_back({std::move(name), &t}); });
  return out;
}

std::vector<std::string> parameter_names(const MagicModel& model) {
  std::vector<std::string> names;
  visit_parameters(model, [&names](std::string name, const Tensor&) { names.push_back(std::move(name)); });
  return names;
}

std::vector<Var> ModelVars::flat() const {
  std::vector<Var> out{input_weight, input_bias};
  for (const auto& layer : layers) {
    for (const auto& head : layer) {
      out.push_back(head.weight);
      out.push_back(head.attention);
    }
  }
  out.push_back(classifier_weight);
  out.push_back(classifier_bias);
  return out;
}

ModelVars bind_model(Tape& tape, const MagicModel& model, bool trainable) {
  auto bind = [&](const Tensor& t) { return trainable ? tape.parameter(t) : tape.constant(t); };
  ModelVars v;
  v.input_weight = bind(model.input_weight);
  v.input_bias = bind(model.input_bias);
  for (const auto& layer : model.layers) v.layers.push_back(bind_layer(tape, layer, trainable));
  v.classifier_weight = bind(model.classifier_weight);
  v.classifier_bias = bind(model.classifier_bias);
  return v;
}

Var project_input(const ModelVars& vars, const Var& features) {
  return add_row(matmul(features, vars.input_weight), vars.input_bias);
}

Var encode_nodes(const MagicModel& model, const ModelVars& vars, const Var& projected, const Topology& topology,
                 const ForwardContext& context) {
  if (vars.layers.size() != model.layers.size()) throw ShapeError("bound variables do not match model depth");
  LayerContext layer_context{context.training, context.rng,
                             context.path != AttentionPath::kAuto ? context.path : model.config.attention_path};
  if (context.traces) context.traces->assign(model.layers.size(), {});
  AttentionTrace* trace = nullptr;
  Var g = projected;
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    if (context.traces) trace = &(*context.traces)[l];
    const Var f = gat_layer_forward(model.layers[l], vars.layers[l], g, topology, layer_context, trace);
    g = (l == 0 || !model.config.residual) ? f : add(g, f);
  }
  return g;
}

Var readout_logits(const ModelVars& vars, const Var& nodes, const Topology& topology) {
  const Var pooled = segment_mean(nodes, topology.graph_offsets);
  return add_row(matmul(pooled, vars.classifier_weight), vars.classifier_bias);
}

Var forward_logits(const MagicModel& model, const ModelVars& vars, const Var& features, const Topology& topology,
                   const ForwardContext& context) {
  if (features.cols() != model.input_dim) {
    throw ShapeError("model expects " + std::to_string(model.input_dim) + " input features, got " +
                     std::to_string(features.cols()));
  }
  const Var nodes = encode_nodes(model, vars, project_input(vars, features), topology, context);
  return readout_logits(vars, nodes, topology);
}

ForwardResult forward(const MagicModel& model, const GraphBatch& batch, AttentionPath path) {
  Tape tape;
  const ModelVars vars = bind_model(tape, model, false);
  const Var x = tape.constant(batch.features);
  ForwardContext context;
  context.path = path;
  const Var logits = forward_logits(model, vars, x, batch.adjacency, context);
  ForwardResult r;
  r.logits = logits.value();
  r.probabilities = softmax_rows(r.logits);
  return r;
}

double cross_entropy_loss(const Tensor& probabilities, std::span<const std::size_t> labels) {
  if (labels.size() != probabilities.rows()) throw ShapeError("cross_entropy_loss: label count does not match rows");
  if (labels.empty()) throw ShapeError("cross_entropy_loss: empty batch");
  double total = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= probabilities.cols()) throw ShapeError("cross_entropy_loss: label out of range");
    total -= std::log(std::max(probabilities(i, labels[i]), kProbabilityFloor));
  }
  return total / static_cast<double>(labels.size());
}

}  // namespace magic
