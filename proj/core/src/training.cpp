// Copyright 2026 The magic-gat Authors
// SPDX-License-Identifier: Apache-2.0

#include "magic/training.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <numeric>

#include "magic/error.hpp"

namespace magic {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0 && std::isfinite(learning_rate))) throw ConfigError("learning_rate must be positive");
  if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("adam betas must lie in [0, 1)");
  }
  if (!(epsilon > 0.0)) throw ConfigError("adam epsilon must be positive");
  if (!(clip_norm >= 0.0)) throw ConfigError("clip_norm must be non-negative");
  if (shards < 1) throw ConfigError("shards must be at least 1");
}

void adam_step(std::span<const NamedTensor> params, std::span<const Tensor> grads, AdamState& state,
               const TrainConfig& config) {
  if (params.size() != grads.size()) throw ShapeError("adam_step: parameter and gradient counts differ");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!grads[i].same_shape(*params[i].value)) {
      throw ShapeError("adam_step: gradient of " + params[i].name + " is " + grads[i].shape_string() +
                       ", parameter is " + params[i].value->shape_string());
    }
    if (!grads[i].all_finite()) throw NumericError("non-finite gradient for parameter " + params[i].name);
  }
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.emplace_back(p.value->rows(), p.value->cols());
      state.v.emplace_back(p.value->rows(), p.value->cols());
    }
  }
  if (state.m.size() != params.size()) throw ShapeError("adam_step: optimizer state does not match parameters");

  state.t += 1;
  const double t = static_cast<double>(state.t);
  const double correct1 = 1.0 - std::pow(config.beta1, t);
  const double correct2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    std::span<double> theta = params[i].value->data();
    std::span<double> m = state.m[i].data();
    std::span<double> v = state.v[i].data();
    std::span<const double> g = grads[i].data();
    for (std::size_t j = 0; j < theta.size(); ++j) {
      m[j] = config.beta1 * m[j] + (1.0 - config.beta1) * g[j];
      v[j] = config.beta2 * v[j] + (1.0 - config.beta2) * g[j] * g[j];
      const double m_hat = m[j] / correct1;
      const double v_hat = v[j] / correct2;
      theta[j] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
    }
  }
}

double clip_global_norm(std::span<Tensor> grads, double max_norm) {
  double sq = 0.0;
  for (const Tensor& g : grads)
    for (double v : g.data()) sq += v * v;
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double factor = max_norm / norm;
    for (Tensor& g : grads)
      for (double& v : g.data()) v *= factor;
  }
  return norm;
}

namespace {

struct ShardResult {
  std::vector<Tensor> grads;
  double loss = 0.0;
};

ShardResult shard_gradients(const MagicModel& model, std::span<const InteractionGraph> graphs,
                            std::span<const std::size_t> index, std::uint64_t dropout_seed) {
  const GraphBatch b = batch(graphs, index);
  Tape tape;
  const ModelVars vars = bind_model(tape, model, true);
  Rng rng(dropout_seed);
  ForwardContext context;
  context.training = true;
  context.rng = &rng;
  const Var logits = forward_logits(model, vars, tape.constant(b.features), b.adjacency, context);
  const Var loss = cross_entropy(logits, b.labels);
  ShardResult r;
  r.loss = loss.value()[0];
  const Gradients g = tape.backward(loss);
  for (const Var& v : vars.flat()) r.grads.push_back(g[v]);
  return r;
}

// Size-weighted sum of shard gradients, reduced in shard order.
ShardResult batch_gradients(const MagicModel& model, std::span<const InteractionGraph> graphs,
                            std::span<const std::size_t> index, const TrainConfig& config, std::size_t epoch,
                            std::size_t batch_no) {
  const std::size_t shards = std::min(config.shards, index.size());
  if (shards == 1) return shard_gradients(model, graphs, index, derive_seed({config.seed, epoch, batch_no, 0}));

  std::vector<std::future<ShardResult>> pending;
  std::vector<std::size_t> sizes;
  for (std::size_t s = 0; s < shards; ++s) {
    const std::size_t lo = index.size() * s / shards, hi = index.size() * (s + 1) / shards;
    sizes.push_back(hi - lo);
    pending.push_back(std::async(std::launch::async, shard_gradients, std::cref(model), graphs,
                                 index.subspan(lo, hi - lo), derive_seed({config.seed, epoch, batch_no, s})));
  }
  ShardResult total;
  for (std::size_t s = 0; s < shards; ++s) {
    ShardResult part = pending[s].get();
    const double w = static_cast<double>(sizes[s]) / static_cast<double>(index.size());
    if (s == 0) {
      total.grads.reserve(part.grads.size());
      for (const Tensor& g : part.grads) total.grads.emplace_back(g.rows(), g.cols());
    }
    for (std::size_t p = 0; p < part.grads.size(); ++p) {
      std::span<double> dst = total.grads[p].data();
      std::span<const double> src = part.grads[p].data();
      for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += w * src[j];
    }
    total.loss += w * part.loss;
  }
  return total;
}

}  // namespace

TrainResult train(MagicModel model, std::span<const InteractionGraph> train_set,
                  std::span<const InteractionGraph> val_set, const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  TrainResult result;
  result.model = model;
  if (config.epochs == 0) return result;
  if (train_set.empty()) throw DataError("training set is empty");
  if (val_set.empty()) throw DataError("validation set is empty");

  const std::vector<NamedTensor> params = parameters(model);
  AdamState state;
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  double best = -1.0;
  std::size_t since_best = 0;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    Rng shuffler(derive_seed({config.seed, epoch, 0x73687566ULL}));
    shuffler.shuffle(std::span<std::size_t>(order));

    double loss_sum = 0.0;
    std::size_t batch_no = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size, ++batch_no) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const std::span<const std::size_t> index(order.data() + start, end - start);
      ShardResult step;
      try {
        step = batch_gradients(model, train_set, index, config, epoch, batch_no);
        if (!std::isfinite(step.loss)) throw NumericError("loss is not finite");
        clip_global_norm(step.grads, config.clip_norm);
        adam_step(params, step.grads, state, config);
      } catch (const NumericError& e) {
        throw NumericError("training diverged at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(batch_no) + ": " + e.what());
      }
      loss_sum += step.loss * static_cast<double>(index.size());
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(order.size());
    rec.val_accuracy = accuracy(model, val_set);
    if (config.track_train_accuracy) rec.train_accuracy = accuracy(model, train_set);
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);

    if (rec.val_accuracy > best) {
      best = rec.val_accuracy;
      result.model = model;
      result.best_epoch = epoch;
      result.best_val_accuracy = rec.val_accuracy;
      since_best = 0;
    } else if (config.patience > 0 && ++since_best >= config.patience) {
      break;
    }
  }
  return result;
}

Tensor predict_probabilities(const MagicModel& model, std::span<const InteractionGraph> graphs, std::size_t chunk) {
  if (chunk == 0) throw ConfigError("prediction chunk size must be positive");
  Tensor out(graphs.size(), model.num_classes);
  for (std::size_t start = 0; start < graphs.size(); start += chunk) {
    const std::size_t end = std::min(graphs.size(), start + chunk);
    const ForwardResult r = forward(model, batch(graphs.subspan(start, end - start)));
    std::copy(r.probabilities.data().begin(), r.probabilities.data().end(),
              out.data().begin() + start * model.num_classes);
  }
  return out;
}

std::vector<std::size_t> predict(const MagicModel& model, std::span<const InteractionGraph> graphs) {
  const Tensor p = predict_probabilities(model, graphs);
  std::vector<std::size_t> out(graphs.size());
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    const auto row = p.row(i);
    out[i] = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

double accuracy(const MagicModel& model, std::span<const InteractionGraph> graphs) {
  if (graphs.empty()) throw DataError("cannot compute accuracy of an empty set");
  const std::vector<std::size_t> pred = predict(model, graphs);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < graphs.size(); ++i) hits += pred[i] == graphs[i].label ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(graphs.size());
}

MetricsReport evaluate(const MagicModel& model, std::span<const InteractionGraph> graphs) {
  if (graphs.empty()) throw DataError("cannot evaluate on an empty set");
  const std::vector<std::size_t> pred = predict(model, graphs);
  std::vector<std::size_t> actual;
  actual.reserve(graphs.size());
  for (const auto& g : graphs) actual.push_back(g.label);
  return metrics(confusion(actual, pred, model.num_classes));
}

std::optional<std::size_t> select_best(std::span<const SearchEntry> entries) {
  std::optional<std::size_t> best;
  double best_acc = 0.0;
  for (const SearchEntry& e : entries) {
    if (e.diverged) continue;
    if (!best || e.val_accuracy > best_acc || (e.val_accuracy == best_acc && e.n < *best)) {
      best = e.n;
      best_acc = e.val_accuracy;
    }
  }
  return best;
}

SearchResult search_layers(const ModelConfig& model_config, std::size_t input_dim, std::size_t num_classes,
                           std::span<const InteractionGraph> train_set, std::span<const InteractionGraph> val_set,
                           const TrainConfig& config, const SearchCallback& on_epoch) {
  model_config.validate();
  if (train_set.empty() || val_set.empty()) throw DataError("layer search needs non-empty train and validation sets");
  SearchResult out;
  std::vector<std::optional<TrainResult>> trained;
  for (std::size_t n = model_config.layer_min; n <= model_config.layer_max; ++n) {
    SearchEntry entry;
    entry.n = n;
    try {
      EpochCallback cb;
      if (on_epoch) cb = [&on_epoch, n](const EpochRecord& r) { on_epoch(n, r); };
      TrainResult r = train(MagicModel::init(model_config, input_dim, num_classes, n), train_set, val_set, config, cb);
      entry.val_accuracy = r.history.empty() ? accuracy(r.model, val_set) : r.best_val_accuracy;
      entry.best_epoch = r.best_epoch;
      trained.emplace_back(std::move(r));
    } catch (const NumericError& e) {
      entry.diverged = true;
      entry.message = e.what();
      trained.emplace_back(std::nullopt);
    }
    out.entries.push_back(entry);
  }
  const std::optional<std::size_t> best = select_best(out.entries);
  if (!best) throw NumericError("layer search failed: every candidate depth diverged");
  out.best_n = *best;
  out.best = std::move(*trained[*best - model_config.layer_min]);
  return out;
}

}  // namespace magic
