// Copyright 2026 The magic-gat Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "cli.hpp"
#include "magic/checkpoint.hpp"
#include "synthetic.hpp"

namespace magic {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "magic");
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  f << text;
}

// The single stderr line must be JSON naming the error kind.
std::string error_kind(const Result& r) {
  EXPECT_EQ(std::count(r.err.begin(), r.err.end(), '\n'), 1) << r.err;
  return json::parse(r.err)["error"].get<std::string>();
}

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    unsetenv("MAGIC_SEED");
    dir_ = new fs::path(testing::scratch_dir("cli"));
    data_ = std::string(MAGIC_SOURCE_DIR) + "/data/synthetic.jsonl";
    conf_ = (*dir_ / "run.conf").string();
    write(conf_,
          "hidden_dim = 8\nheads = 2\nlayer_min = 1\nlayer_max = 2\nepochs = 6\npatience = 0\nbatch_size = 16\nseed = 2\n");
    emb_ = (*dir_ / "e.meb").string();
    ASSERT_EQ(run({"embed-fallback", "--data", data_, "--out", emb_, "--dim", "16"}).code, 0);
    model_ = (*dir_ / "m.ckpt").string();
    report_ = (*dir_ / "train.json").string();
    const Result r = run({"train", "--data", data_, "--embeddings", emb_, "--config", conf_, "--out", model_,
                          "--report", report_});
    ASSERT_EQ(r.code, 0) << r.err;
    train_out_ = new std::string(r.out);
  }
  static void TearDownTestSuite() {
    delete dir_;
    delete train_out_;
  }

  static fs::path* dir_;
  static std::string data_, conf_, emb_, model_, report_;
  static std::string* train_out_;
};
fs::path* Cli::dir_ = nullptr;
std::string Cli::data_, Cli::conf_, Cli::emb_, Cli::model_, Cli::report_;
std::string* Cli::train_out_ = nullptr;

TEST_F(Cli, TrainWritesReportWithRequiredFields) {
  const json r = json::parse(slurp(report_));
  for (const char* key : {"dataset", "split_sizes", "best_n", "history", "confusion", "metrics", "layer_search"})
    EXPECT_TRUE(r.contains(key)) << key;
  EXPECT_EQ(r["split_sizes"]["train"].get<int>() + r["split_sizes"]["validation"].get<int>() +
                r["split_sizes"]["test"].get<int>(),
            r["dataset"]["records"].get<int>());
  EXPECT_EQ(r["layer_search"].size(), 2u);
  EXPECT_NE(train_out_->find("n=1 epoch=1 train_loss="), std::string::npos) << *train_out_;
  EXPECT_NE(train_out_->find("accuracy: "), std::string::npos);
}

TEST_F(Cli, EvaluateReproducesTrainTestMetrics) {
  const fs::path eval_report = *dir_ / "eval.json";
  const Result r = run({"evaluate", "--data", data_, "--embeddings", emb_, "--model", model_, "--report",
                        eval_report.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const json train = json::parse(slurp(report_)), eval = json::parse(slurp(eval_report));
  EXPECT_EQ(train["metrics"], eval["metrics"]);
  EXPECT_EQ(train["confusion"], eval["confusion"]);
}

TEST_F(Cli, InfoReportsBestN) {
  const Result r = run({"info", "--model", model_});
  ASSERT_EQ(r.code, 0) << r.err;
  const json j = json::parse(r.out);
  EXPECT_EQ(j["best_n"], json::parse(slurp(report_))["best_n"]);
  EXPECT_EQ(j["labels"], json::array({"real", "fake"}));
}

TEST_F(Cli, PredictPrintsLabelAndProbabilities) {
  const fs::path input = *dir_ / "one.jsonl";
  std::ifstream src(data_);
  std::string first;
  std::getline(src, first);
  write(input, first + "\n");
  const Result r = run({"predict", "--model", model_, "--embeddings", emb_, "--input", input.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const json j = json::parse(r.out);
  EXPECT_TRUE(j["label"] == "real" || j["label"] == "fake");
  EXPECT_NEAR(j["probabilities"]["real"].get<double>() + j["probabilities"]["fake"].get<double>(), 1.0, 1e-12);
}

TEST_F(Cli, SchemaMismatchIsAnError) {
  const Result r = run({"info", "--model", model_, "--schema", "mfnd"});
  EXPECT_EQ(r.code, 4);
  EXPECT_EQ(error_kind(r), "data");
}

TEST_F(Cli, RepeatedTrainIsByteIdenticalApartFromHeader) {
  const fs::path model2 = *dir_ / "m2.ckpt", report2 = *dir_ / "train2.json";
  ASSERT_EQ(run({"train", "--data", data_, "--embeddings", emb_, "--config", conf_, "--out", model2.string(),
                 "--report", report2.string(), "--quiet"})
                .code,
            0);
  EXPECT_EQ(slurp(model_), slurp(model2));
  json a = json::parse(slurp(report_)), b = json::parse(slurp(report2));
  a.erase("header");
  b.erase("header");
  EXPECT_EQ(a, b);
}

TEST_F(Cli, EnvironmentSeedChangesTheRun) {
  const fs::path report2 = *dir_ / "seeded.json";
  setenv("MAGIC_SEED", "99", 1);
  const Result r = run({"train", "--data", data_, "--embeddings", emb_, "--config", conf_, "--report",
                        report2.string(), "--quiet"});
  unsetenv("MAGIC_SEED");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(json::parse(slurp(report_))["history"], json::parse(slurp(report2))["history"]);
}

TEST_F(Cli, AblateNoImageDropsImageNodes) {
  const fs::path report2 = *dir_ / "ablate.json";
  const Result r = run({"ablate", "--variant", "no_image", "--data", data_, "--embeddings", emb_, "--config", conf_,
                        "--report", report2.string(), "--quiet"});
  ASSERT_EQ(r.code, 0) << r.err;
  const json j = json::parse(slurp(report2));
  EXPECT_EQ(j["variant"], "no_image");
  EXPECT_EQ(j["graph_stats"]["image_nodes"], 0);
}

TEST(CliStandalone, MetricsOnPublishedMatrix) {
  const auto dir = testing::scratch_dir("cli-metrics");
  write(dir / "m.json", "[[415, 3], [5, 203]]");
  const Result r = run({"metrics", "--confusion", (dir / "m.json").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("accuracy: 0.9872"), std::string::npos) << r.out;

  write(dir / "l.json", R"({"labels": ["real", "fake"], "confusion": [[415, 3], [5, 203]]})");
  const Result j = run({"metrics", "--confusion", (dir / "l.json").string(), "--json"});
  ASSERT_EQ(j.code, 0) << j.err;
  const json parsed = json::parse(j.out);
  EXPECT_NEAR(parsed["macro_f1"].get<double>(), 0.985565, 1e-6);
}

TEST(CliStandalone, UnknownFlagGivesUsage) {
  const Result r = run({"metrics", "--confusion", MAGIC_SOURCE_DIR "/data/smoke.conf", "--bogus"});
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(error_kind(r), "usage");
  EXPECT_NE(r.out.find("Usage"), std::string::npos) << r.out;
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"frobnicate"}).code, 2);
}

TEST(CliStandalone, HelpExitsZero) { EXPECT_EQ(run({"--help"}).code, 0); }

TEST(CliStandalone, BadInputsGiveSingleLineErrors) {
  const auto dir = testing::scratch_dir("cli-errors");
  write(dir / "bad.json", "[[1, 2], [3]]");
  Result r = run({"metrics", "--confusion", (dir / "bad.json").string()});
  EXPECT_NE(r.code, 0);
  error_kind(r);

  write(dir / "notjson.json", "{");
  r = run({"metrics", "--confusion", (dir / "notjson.json").string()});
  EXPECT_EQ(error_kind(r), "format");

  write(dir / "junk.ckpt", "not a checkpoint at all");
  r = run({"info", "--model", (dir / "junk.ckpt").string()});
  EXPECT_EQ(r.code, 5);
  EXPECT_EQ(error_kind(r), "format");

  write(dir / "bad.conf", "hiden_dim = 4\n");
  write(dir / "e.meb", "");
  r = run({"train", "--data", MAGIC_SOURCE_DIR "/data/synthetic.jsonl", "--embeddings", (dir / "e.meb").string(),
           "--config", (dir / "bad.conf").string()});
  EXPECT_EQ(r.code, 3);
  EXPECT_EQ(error_kind(r), "config");
}

TEST(CliStandalone, EmbedFallbackJsonLinesVariant) {
  const auto dir = testing::scratch_dir("cli-embed");
  const Result r = run({"embed-fallback", "--data", MAGIC_SOURCE_DIR "/data/synthetic.jsonl", "--out",
                        (dir / "e.jsonl").string(), "--dim", "8", "--jsonl"});
  ASSERT_EQ(r.code, 0) << r.err;
  const EmbeddingStore s = read_embeddings(dir / "e.jsonl");
  EXPECT_EQ(s.dim(), 8u);
  EXPECT_TRUE(s.contains("post:" + read_records(MAGIC_SOURCE_DIR "/data/synthetic.jsonl").front().id));
}

}  // namespace
}  // namespace magic
