// Copyright 2026 The magic-gat Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "magic/checkpoint.hpp"
#include "magic/config.hpp"
#include "magic/dataset.hpp"
#include "magic/embedding.hpp"
#include "magic/error.hpp"
#include "magic/graph.hpp"
#include "magic/metrics.hpp"
#include "magic/model.hpp"
#include "magic/report.hpp"
#include "magic/training.hpp"

namespace magic::cli {
namespace {

namespace fs = std::filesystem;

struct Options {
  std::string data;
  std::string embeddings;
  std::string config;
  std::string out;
  std::string report;
  std::string model;
  std::string input;
  std::string confusion;
  std::string schema;
  std::string variant;
  std::size_t dim = 768;
  std::uint64_t seed = 0;
  bool jsonl = false;
  bool json = false;
  bool quiet = false;
};

std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot write " + path.string());
  f << text;
  if (!f) throw DataError("short write to " + path.string());
}

void write_report(const std::string& path, const ReportJson& report) {
  if (!path.empty()) write_text(path, report.dump(2) + "\n");
}

RunConfig load_run_config(const Options& o) {
  RunConfig c = o.config.empty() ? RunConfig{} : load_config(o.config);
  apply_environment(c);
  c.validate();
  return c;
}

LabelSchema resolve_schema(const std::string& name, const std::string& config_path) {
  if (auto b = LabelSchema::builtin(name)) return *b;
  fs::path p(name);
  if (p.is_relative() && !fs::exists(p) && !config_path.empty()) {
    const fs::path beside = fs::path(config_path).parent_path() / p;
    if (fs::exists(beside)) p = beside;
  }
  return LabelSchema::load(p);
}

std::vector<InteractionGraph> build_graphs(std::span<const MultimodalRecord> records, const EmbeddingStore& store,
                                           const GraphOptions& options) {
  std::vector<InteractionGraph> graphs;
  graphs.reserve(records.size());
  for (const auto& r : records) graphs.push_back(build_graph(r, store, store.dim(), options));
  return graphs;
}

ReportJson graph_stats(std::span<const InteractionGraph> graphs) {
  std::size_t nodes = 0, images = 0, comments = 0, edges = 0, largest = 0;
  for (const auto& g : graphs) {
    nodes += g.num_nodes();
    images += g.count(NodeKind::kImage);
    comments += g.count(NodeKind::kComment);
    edges += g.adjacency.undirected_edge_count();
    largest = std::max(largest, g.num_nodes());
  }
  ReportJson j;
  j["graphs"] = graphs.size();
  j["nodes"] = nodes;
  j["image_nodes"] = images;
  j["comment_nodes"] = comments;
  j["undirected_edges"] = edges;
  j["max_nodes"] = largest;
  return j;
}

ReportJson header(std::string_view command) {
  ReportJson h;
  h["tool"] = "magic";
  h["command"] = command;
  h["timestamp"] = utc_timestamp();
  return h;
}

ReportJson dataset_json(const Options& o, const LabelSchema& schema, std::size_t records, std::size_t dim) {
  ReportJson d;
  d["path"] = o.data;
  d["embeddings"] = o.embeddings;
  d["records"] = records;
  d["labels"] = schema.names();
  d["embedding_dim"] = dim;
  return d;
}

ReportJson split_json(const DatasetSplit& s) {
  ReportJson j;
  j["train"] = s.train.size();
  j["validation"] = s.validation.size();
  j["test"] = s.test.size();
  return j;
}

// ---- subcommands ----

int embed_fallback(const Options& o, std::ostream& out) {
  const std::vector<RawRecord> records = read_records(o.data);
  const EmbeddingStore store = fallback_store(records, o.dim, o.seed);
  if (o.jsonl) {
    write_meb_jsonl(o.out, store);
  } else {
    write_meb(o.out, store);
  }
  out << "wrote " << store.rows() << " rows of dim " << store.dim() << " to " << o.out << "\n";
  return 0;
}

struct Prepared {
  RunConfig config;
  std::optional<LabelSchema> schema;
  EmbeddingStore store{1};
  std::vector<MultimodalRecord> records;
  DatasetSplit split;
  std::vector<InteractionGraph> train, validation, test;
};

Prepared prepare(const RunConfig& config, const LabelSchema& schema, const Options& o) {
  Prepared p;
  p.config = config;
  p.schema = schema;
  p.records = parse_dataset(o.data, schema);
  p.store = read_embeddings(o.embeddings);
  const std::vector<InteractionGraph> graphs = build_graphs(p.records, p.store, config.graph_options());
  p.split = split_dataset(p.records, schema.size(), config.seed, config.split);
  p.train = select<InteractionGraph>(graphs, p.split.train);
  p.validation = select<InteractionGraph>(graphs, p.split.validation);
  p.test = select<InteractionGraph>(graphs, p.split.test);
  return p;
}

int train_command(const Options& o, std::string_view command, std::ostream& out) {
  RunConfig config = load_run_config(o);
  if (!o.variant.empty()) {
    config.variant = parse_variant(o.variant);
    config.validate();
  }
  const LabelSchema schema = resolve_schema(config.schema, o.config);
  const Prepared p = prepare(config, schema, o);
  const ModelConfig model_config = config.effective_model();

  SearchCallback progress;
  if (!o.quiet) {
    progress = [&out](std::size_t n, const EpochRecord& r) {
      out << "n=" << n << " epoch=" << r.epoch << " train_loss=" << fixed(r.train_loss)
          << " val_accuracy=" << fixed(r.val_accuracy) << "\n";
    };
  }
  SearchResult search = search_layers(model_config, p.store.dim(), schema.size(), p.train, p.validation,
                                      config.effective_train(), progress);

  Checkpoint ckpt{config, schema.names(), search.best.model};
  if (!o.out.empty()) save_checkpoint(o.out, ckpt);

  ReportJson report;
  report["header"] = header(command);
  report["dataset"] = dataset_json(o, schema, p.records.size(), p.store.dim());
  report["variant"] = variant_name(config.variant);
  report["heads"] = model_config.effective_heads();
  report["split_sizes"] = split_json(p.split);
  report["best_n"] = search.best_n;
  report["best_epoch"] = search.best.best_epoch;
  report["layer_search"] = search_json(search.entries);
  report["diverged"] = diverged_json(search.entries);
  report["history"] = history_json(search.best.history);
  report["graph_stats"] = graph_stats(p.train);
  if (!p.test.empty()) {
    const MetricsReport m = evaluate(search.best.model, p.test);
    report["partition"] = "test";
    report["confusion"] = confusion_json(m.matrix);
    report["metrics"] = metrics_json(m, schema.names());
    out << "best_n: " << search.best_n << "\n" << format_metrics(m, schema.names());
  } else {
    report["confusion"] = nullptr;
    report["metrics"] = nullptr;
    out << "best_n: " << search.best_n << "\n";
  }
  write_report(o.report, report);
  return 0;
}

Checkpoint load_model(const Options& o) {
  Checkpoint c = load_checkpoint(o.model);
  if (!o.schema.empty()) require_schema(c, resolve_schema(o.schema, ""));
  return c;
}

void require_dim(const Checkpoint& c, const EmbeddingStore& store) {
  if (store.dim() != c.model.input_dim) {
    throw ShapeError("embedding dim " + std::to_string(store.dim()) + " does not match the model's input dim " +
                     std::to_string(c.model.input_dim));
  }
}

int evaluate_command(const Options& o, std::ostream& out) {
  const Checkpoint ckpt = load_model(o);
  const LabelSchema schema(ckpt.labels);
  const Prepared p = prepare(ckpt.config, schema, o);
  require_dim(ckpt, p.store);
  if (p.test.empty()) throw DataError("the test partition is empty");
  const MetricsReport m = evaluate(ckpt.model, p.test);

  ReportJson report;
  report["header"] = header("evaluate");
  report["dataset"] = dataset_json(o, schema, p.records.size(), p.store.dim());
  report["variant"] = variant_name(ckpt.config.variant);
  report["split_sizes"] = split_json(p.split);
  report["best_n"] = ckpt.best_n();
  report["history"] = ReportJson::array();
  report["partition"] = "test";
  report["graph_stats"] = graph_stats(p.test);
  report["confusion"] = confusion_json(m.matrix);
  report["metrics"] = metrics_json(m, schema.names());
  write_report(o.report, report);
  out << format_metrics(m, schema.names());
  return 0;
}

int predict_command(const Options& o, std::ostream& out) {
  const Checkpoint ckpt = load_model(o);
  const EmbeddingStore store = read_embeddings(o.embeddings);
  require_dim(ckpt, store);
  const std::vector<RawRecord> raw = read_records(o.input);
  std::vector<InteractionGraph> graphs;
  for (const RawRecord& r : raw) {
    const MultimodalRecord rec{r.id, 0, r.post_text, r.comments, r.image_ref};
    graphs.push_back(build_graph(rec, store, store.dim(), ckpt.config.graph_options()));
  }
  if (graphs.empty()) throw DataError("input file holds no records");
  const Tensor p = predict_probabilities(ckpt.model, graphs);
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    std::size_t best = 0;
    ReportJson probs;
    for (std::size_t c = 0; c < ckpt.labels.size(); ++c) {
      probs[ckpt.labels[c]] = p(i, c);
      if (p(i, c) > p(i, best)) best = c;
    }
    ReportJson line;
    line["id"] = graphs[i].id;
    line["label"] = ckpt.labels[best];
    line["probabilities"] = probs;
    out << line.dump() << "\n";
  }
  return 0;
}

int metrics_command(const Options& o, std::ostream& out) {
  std::ifstream f(o.confusion);
  if (!f) throw DataError("cannot open " + o.confusion);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(f);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("confusion file is not valid JSON: ") + e.what());
  }
  std::vector<std::string> labels;
  const MetricsReport m = metrics(confusion_from_json(doc, &labels));
  if (o.json) {
    ReportJson j = metrics_json(m, labels);
    j["confusion"] = confusion_json(m.matrix);
    out << j.dump(2) << "\n";
  } else {
    out << format_metrics(m, labels);
  }
  return 0;
}

int info_command(const Options& o, std::ostream& out) {
  const Checkpoint c = load_model(o);
  std::size_t count = 0;
  for (const auto& p : parameters(c.model)) count += p.value->size();
  ReportJson j;
  j["best_n"] = c.best_n();
  j["labels"] = c.labels;
  j["input_dim"] = c.model.input_dim;
  j["num_classes"] = c.model.num_classes;
  j["hidden_dim"] = c.model.config.hidden_dim;
  j["heads"] = c.model.config.effective_heads();
  j["variant"] = variant_name(c.config.variant);
  j["parameters"] = count;
  j["config"] = to_text(c.config);
  out << j.dump(2) << "\n";
  return 0;
}

int exit_code(std::string_view kind) {
  if (kind == "config") return 3;
  if (kind == "data") return 4;
  if (kind == "format") return 5;
  if (kind == "numeric") return 6;
  if (kind == "shape") return 7;
  return 1;
}

void report_error(std::ostream& err, std::string_view kind, std::string_view message) {
  nlohmann::json j;
  j["error"] = kind;
  j["message"] = message;
  err << j.dump() << "\n";
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multimodal graph attention classifier for fake-news detection", "magic"};
  app.require_subcommand(1);
  Options o;
  auto existing = CLI::ExistingFile;

  auto* embed = app.add_subcommand("embed-fallback", "Write deterministic hashed embeddings for a dataset");
  embed->add_option("--data", o.data, "dataset (JSON lines)")->required()->check(existing);
  embed->add_option("--out", o.out, "output store")->required();
  embed->add_option("--dim", o.dim, "embedding width")->check(CLI::PositiveNumber);
  embed->add_option("--seed", o.seed, "hashing seed");
  embed->add_flag("--jsonl", o.jsonl, "write the JSON-lines debug variant");

  auto add_training = [&](CLI::App* sub) {
    sub->add_option("--data", o.data, "dataset (JSON lines)")->required()->check(existing);
    sub->add_option("--embeddings", o.embeddings, "embedding store")->required()->check(existing);
    sub->add_option("--config", o.config, "run configuration (key = value)")->check(existing);
    sub->add_option("--out", o.out, "checkpoint to write");
    sub->add_option("--report", o.report, "JSON report to write");
    sub->add_flag("--quiet", o.quiet, "suppress per-epoch lines");
  };
  auto* train = app.add_subcommand("train", "Split, search the layer count, train and save the best model");
  add_training(train);
  auto* ablate = app.add_subcommand("ablate", "Train and evaluate an ablation variant");
  add_training(ablate);
  ablate->add_option("--variant", o.variant, "ablation variant")
      ->required()
      ->check(CLI::IsMember({"full", "no_image", "no_multihead", "no_fusion"}));

  auto* eval = app.add_subcommand("evaluate", "Metrics of a checkpoint on the test partition");
  eval->add_option("--data", o.data, "dataset (JSON lines)")->required()->check(existing);
  eval->add_option("--embeddings", o.embeddings, "embedding store")->required()->check(existing);
  eval->add_option("--model", o.model, "checkpoint")->required()->check(existing);
  eval->add_option("--report", o.report, "JSON report to write");
  eval->add_option("--schema", o.schema, "require this label schema");

  auto* predict = app.add_subcommand("predict", "Classify the records of a file");
  predict->add_option("--model", o.model, "checkpoint")->required()->check(existing);
  predict->add_option("--embeddings", o.embeddings, "embedding store")->required()->check(existing);
  predict->add_option("--input", o.input, "records (JSON lines)")->required()->check(existing);
  predict->add_option("--schema", o.schema, "require this label schema");

  auto* metrics = app.add_subcommand("metrics", "Accuracy and macro precision/recall/F1 of a confusion matrix");
  metrics->add_option("--confusion", o.confusion, "JSON matrix, rows actual, columns predicted")
      ->required()
      ->check(existing);
  metrics->add_flag("--json", o.json, "print JSON instead of key: value lines");

  auto* info = app.add_subcommand("info", "Describe a checkpoint");
  info->add_option("--model", o.model, "checkpoint")->required()->check(existing);
  info->add_option("--schema", o.schema, "require this label schema");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    report_error(err, "usage", e.what());
    const CLI::App* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    out << sub->help();
    return 2;
  }

  try {
    if (*embed) return embed_fallback(o, out);
    if (*train) return train_command(o, "train", out);
    if (*ablate) return train_command(o, "ablate", out);
    if (*eval) return evaluate_command(o, out);
    if (*predict) return predict_command(o, out);
    if (*metrics) return metrics_command(o, out);
    if (*info) return info_command(o, out);
  } catch (const Error& e) {
    report_error(err, e.kind(), e.what());
    return exit_code(e.kind());
  } catch (const nlohmann::json::exception& e) {
    report_error(err, "format", e.what());
    return exit_code("format");
  } catch (const std::exception& e) {
    report_error(err, "internal", e.what());
    return 1;
  }
  return 2;
}

}  // namespace magic::cli
