// Copyright 2026 The magic-gat Authors
// SPDX-License-Identifier: Apache-2.0

#include "magic/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "magic/error.hpp"

namespace magic {

ModelConfig RunConfig::effective_model() const {
  ModelConfig m = ablation_variant(model, variant);
  m.seed = seed;
  return m;
}

TrainConfig RunConfig::effective_train() const {
  TrainConfig t = train;
  t.seed = seed;
  return t;
}

GraphOptions RunConfig::graph_options() const {
  GraphOptions g;
  g.include_image = effective_model().include_image;
  g.comment_links = comment_links;
  g.image_comment_edges = image_comment_edges;
  return g;
}

void RunConfig::validate() const {
  if (!(split.test >= 0.0 && split.test < 1.0)) throw ConfigError("test_ratio must lie in [0, 1)");
  if (!(split.validation >= 0.0 && split.validation < 1.0)) throw ConfigError("val_ratio must lie in [0, 1)");
  effective_model().validate();
  effective_train().validate();
}

namespace {

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  // Prefer the shortest form that still round-trips.
  for (int precision = 1; precision < 17; ++precision) {
    char shorter[32];
    std::snprintf(shorter, sizeof shorter, "%.*g", precision, v);
    if (std::strtod(shorter, nullptr) == v) return shorter;
  }
  return buf;
}

std::string fmt_bool(bool v) { return v ? "true" : "false"; }

double to_double(std::string_view s) {
  const std::string str(s);
  char* end = nullptr;
  const double v = std::strtod(str.c_str(), &end);
  if (str.empty() || end != str.c_str() + str.size() || !std::isfinite(v)) {
    throw ConfigError("expected a number, got '" + str + "'");
  }
  return v;
}

std::uint64_t to_u64(std::string_view s) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw ConfigError("expected a non-negative integer, got '" + std::string(s) + "'");
  }
  return v;
}

bool to_bool(std::string_view s) {
  if (s == "true") return true;
  if (s == "false") return false;
  throw ConfigError("expected true or false, got '" + std::string(s) + "'");
}

template <typename E>
E to_enum(std::string_view s, std::initializer_list<std::pair<std::string_view, E>> options) {
  std::string names;
  for (const auto& [name, value] : options) {
    if (name == s) return value;
    names += (names.empty() ? "" : ", ") + std::string(name);
  }
  throw ConfigError("expected one of " + names + ", got '" + std::string(s) + "'");
}

struct Field {
  ConfigKey key;
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define MAGIC_FIELD(NAME, MEMBER, PARSE, FORMAT, HELP)                                            \
  Field {                                                                                         \
    {NAME, "", HELP}, [](RunConfig& c, std::string_view v) { c.MEMBER = PARSE(v); },              \
        [](const RunConfig& c) { return FORMAT(c.MEMBER); }                                       \
  }

std::size_t to_size(std::string_view s) { return static_cast<std::size_t>(to_u64(s)); }
std::string fmt_u64(std::uint64_t v) { return std::to_string(v); }

CommentLinks to_links(std::string_view s) {
  return to_enum<CommentLinks>(s, {{"star", CommentLinks::kStar}, {"chain", CommentLinks::kChain}});
}
std::string fmt_links(CommentLinks v) { return v == CommentLinks::kChain ? "chain" : "star"; }

PoolingMode to_pooling(std::string_view s) {
  return to_enum<PoolingMode>(s, {{"coefficient", PoolingMode::kCoefficient}, {"node", PoolingMode::kNode}});
}
std::string fmt_pooling(PoolingMode v) { return v == PoolingMode::kNode ? "node" : "coefficient"; }

TopkScope to_scope(std::string_view s) {
  return to_enum<TopkScope>(s, {{"every_layer", TopkScope::kEveryLayer}, {"last_layer", TopkScope::kLastLayer}});
}
std::string fmt_scope(TopkScope v) { return v == TopkScope::kLastLayer ? "last_layer" : "every_layer"; }

AttentionPath to_path(std::string_view s) {
  return to_enum<AttentionPath>(
      s, {{"auto", AttentionPath::kAuto}, {"dense", AttentionPath::kDense}, {"sparse", AttentionPath::kSparse}});
}
std::string fmt_path(AttentionPath v) {
  switch (v) {
    case AttentionPath::kDense: return "dense";
    case AttentionPath::kSparse: return "sparse";
    case AttentionPath::kAuto: break;
  }
  return "auto";
}

std::string fmt_variant(Variant v) { return std::string(variant_name(v)); }
std::string to_string_value(std::string_view s) {
  if (s.empty()) throw ConfigError("expected a non-empty value");
  return std::string(s);
}
std::string fmt_string(const std::string& s) { return s; }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f{
        MAGIC_FIELD("schema", schema, to_string_value, fmt_string,
                    "label schema: fakeddit2, fakeddit3, mfnd, or a file listing one label per line"),
        MAGIC_FIELD("test_ratio", split.test, to_double, fmt_double, "fraction of all records held out for test"),
        MAGIC_FIELD("val_ratio", split.validation, to_double, fmt_double,
                    "fraction of the remaining pool used for validation"),
        MAGIC_FIELD("include_image", model.include_image, to_bool, fmt_bool, "add the image node to every graph"),
        MAGIC_FIELD("comment_links", comment_links, to_links, fmt_links,
                    "star: comments attach to the post; chain: consecutive comments are also linked"),
        MAGIC_FIELD("image_comment_edges", image_comment_edges, to_bool, fmt_bool, "link the image node to comments"),
        MAGIC_FIELD("hidden_dim", model.hidden_dim, to_size, fmt_u64, "width of node representations"),
        MAGIC_FIELD("heads", model.heads, to_size, fmt_u64, "attention heads per layer"),
        MAGIC_FIELD("layer_min", model.layer_min, to_size, fmt_u64, "smallest depth tried by the layer search"),
        MAGIC_FIELD("layer_max", model.layer_max, to_size, fmt_u64, "largest depth tried by the layer search"),
        MAGIC_FIELD("topk_ratio", model.topk_ratio, to_double, fmt_double,
                    "fraction of attention coefficients kept per node"),
        MAGIC_FIELD("dropout", model.dropout, to_double, fmt_double, "dropout on layer inputs and coefficients"),
        MAGIC_FIELD("leaky_slope", model.leaky_slope, to_double, fmt_double, "LeakyReLU slope of attention logits"),
        MAGIC_FIELD("elu_alpha", model.elu_alpha, to_double, fmt_double, "ELU alpha"),
        MAGIC_FIELD("pooling", model.pooling, to_pooling, fmt_pooling,
                    "coefficient: per-node top-k; node: drop the least attended nodes of each graph"),
        MAGIC_FIELD("topk_scope", model.topk_scope, to_scope, fmt_scope, "every_layer or last_layer"),
        MAGIC_FIELD("residual", model.residual, to_bool, fmt_bool, "residual additions between layers"),
        MAGIC_FIELD("attention_path", model.attention_path, to_path, fmt_path,
                    "auto picks dense attention up to 64 nodes, sparse above"),
        MAGIC_FIELD("variant", variant, parse_variant, fmt_variant, "full, no_image, no_multihead or no_fusion"),
        MAGIC_FIELD("learning_rate", train.learning_rate, to_double, fmt_double, "Adam learning rate"),
        MAGIC_FIELD("batch_size", train.batch_size, to_size, fmt_u64, "graphs per batch"),
        MAGIC_FIELD("epochs", train.epochs, to_size, fmt_u64, "epoch budget per candidate depth"),
        MAGIC_FIELD("patience", train.patience, to_size, fmt_u64,
                    "epochs without validation improvement before stopping; 0 disables"),
        MAGIC_FIELD("clip_norm", train.clip_norm, to_double, fmt_double, "global gradient norm ceiling; 0 disables"),
        MAGIC_FIELD("adam_beta1", train.beta1, to_double, fmt_double, "Adam first-moment decay"),
        MAGIC_FIELD("adam_beta2", train.beta2, to_double, fmt_double, "Adam second-moment decay"),
        MAGIC_FIELD("adam_epsilon", train.epsilon, to_double, fmt_double, "Adam epsilon"),
        MAGIC_FIELD("shards", train.shards, to_size, fmt_u64, "gradient shards per batch"),
        MAGIC_FIELD("seed", seed, to_u64, fmt_u64, "seed for splitting, initialization, shuffling and dropout"),
    };
    const RunConfig defaults;
    for (Field& field : f) field.key.default_value = field.get(defaults);
    return f;
  }();
  return table;
}

#undef MAGIC_FIELD

const Field* find_field(std::string_view key) {
  for (const Field& f : fields())
    if (f.key.name == key) return &f;
  return nullptr;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> k;
    for (const Field& f : fields()) k.push_back(f.key);
    return k;
  }();
  return keys;
}

void set_config_value(RunConfig& config, std::string_view key, std::string_view value) {
  const Field* f = find_field(key);
  if (!f) throw ConfigError("unknown config key '" + std::string(key) + "'");
  try {
    f->set(config, value);
  } catch (const ConfigError& e) {
    throw ConfigError("config key '" + std::string(key) + "': " + e.what());
  }
}

RunConfig parse_config(std::string_view text) {
  RunConfig config;
  std::set<std::string, std::less<>> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = "config line " + std::to_string(line_no) + ": ";
    if (eq == std::string_view::npos) throw ConfigError(where + "expected 'key = value'");
    const std::string_view key = trim(line.substr(0, eq));
    const std::string_view value = trim(line.substr(eq + 1));
    if (!seen.insert(std::string(key)).second) throw ConfigError(where + "key '" + std::string(key) + "' repeated");
    try {
      set_config_value(config, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
  }
  config.validate();
  return config;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string to_text(const RunConfig& config) {
  std::string out;
  for (const Field& f : fields()) out += f.key.name + " = " + f.get(config) + "\n";
  return out;
}

bool apply_environment(RunConfig& config) {
  const char* seed = std::getenv("MAGIC_SEED");
  if (seed == nullptr) return false;
  try {
    config.seed = to_u64(seed);
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("MAGIC_SEED: ") + e.what());
  }
  return true;
}

}  // namespace magic
