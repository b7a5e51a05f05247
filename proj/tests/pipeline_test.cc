#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "wsre/error.h"
#include "wsre/llm/backends.h"
#include "wsre/llm/gateway.h"
#include "wsre/pipeline/config.h"
#include "wsre/pipeline/stages.h"
#include "toy_world.h"

namespace wsre::pipeline {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

const fs::path kPacificFair = fs::path(WSRE_TEST_DATA_DIR) / "pacific_fair";

fs::path FreshDir(const std::string& name) {
  const fs::path dir = fs::path(WSRE_TEST_TMP_DIR) / "pipeline" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Relative path -> contents for every regular file under root.
std::map<std::string, std::string> Snapshot(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = Slurp(e.path());
  }
  return out;
}

void Quiet(std::string_view) {}

RunConfig ToyConfig(const fs::path& dir, std::uint64_t world_seed = 3) {
  const auto world = testing::MakeToyWorld({3, 5, 0.3, world_seed});
  const auto files = testing::WriteWorld(world, dir / "in");
  RunConfig c;
  c.corpus = files.corpus;
  c.schema = files.schema;
  c.output_dir = dir / "out";
  c.backend.kind = llm::BackendKind::kStub;
  c.backend.n_hidden = 16;
  c.backend.seed = 5;
  c.backend.cache_path = dir / "cache.jsonl";
  c.percentile = 10;
  return c;
}

TEST(ConfigTest, JsonRoundTripAndOverrides) {
  RunConfig c;
  c.corpus = "a.json";
  c.mode = predict::MaskMode::kDpSmoothed;
  c.prior.fraction = 0.25;
  c.backend.temperature = 0.2;
  c.thresholds.cos = {80, 20};
  const json j = ConfigToJson(c);
  EXPECT_EQ(ConfigToJson(ConfigFromJson(j)), j);

  const RunConfig o = ConfigFromJson(json::parse(R"({"percentile": 5, "prior": {"lambda": 0.3}})"), c);
  EXPECT_EQ(o.percentile, 5.0);
  EXPECT_EQ(o.prior.lambda, 0.3);
  EXPECT_EQ(o.prior.fraction, 0.25);
  EXPECT_EQ(o.mode, predict::MaskMode::kDpSmoothed);
}

TEST(ConfigTest, UnknownKeysAndBadRangesAreRejected) {
  EXPECT_THROW(ConfigFromJson(json::parse(R"({"percentil": 5})")), ValidationError);
  EXPECT_THROW(ConfigFromJson(json::parse(R"({"prior": {"fractoin": 0.5}})")), ValidationError);
  EXPECT_THROW(ConfigFromJson(json::parse(R"({"mode": "oracle"})")), ValidationError);
  RunConfig c;
  c.percentile = 0;
  EXPECT_THROW(ValidateRunConfig(c), ValidationError);
  c = RunConfig{};
  c.include_sr = true;
  EXPECT_THROW(ValidateRunConfig(c), ValidationError);
}

TEST(ConfigTest, HashIgnoresLocationsOnly) {
  RunConfig a;
  RunConfig b = a;
  b.output_dir = "elsewhere";
  b.backend.cache_path = "other.jsonl";
  EXPECT_EQ(ConfigHash(a), ConfigHash(b));
  b.percentile = 2;
  EXPECT_NE(ConfigHash(a), ConfigHash(b));
}

TEST(PipelineTest, RunAllTwiceIsByteIdenticalAndSecondRunIsCached) {
  const fs::path dir = FreshDir("determinism");
  RunConfig c = ToyConfig(dir);
  {
    Pipeline p(c, Quiet);
    p.RunAll();
    EXPECT_GT(p.gateway().stats().backend_calls, 0u);
  }
  const auto first = Snapshot(c.output_dir);
  fs::remove_all(c.output_dir);
  {
    Pipeline p(c, Quiet);
    p.RunAll();
    EXPECT_EQ(p.gateway().stats().backend_calls, 0u);
    EXPECT_GT(p.gateway().stats().cache_hits, 0u);
  }
  const auto second = Snapshot(c.output_dir);
  EXPECT_EQ(first, second);
  for (const char* f : {"summarize/summaries.jsonl", "score/scores.jsonl", "fit-prior/prior.json",
                        "aggregate/params.json", "predict/predictions.json",
                        "evaluate/report.json", "evaluate/manifest.json"}) {
    EXPECT_TRUE(first.count(f)) << f;
  }
}

TEST(PipelineTest, StagesComposeToRunAll) {
  const fs::path dir = FreshDir("compose");
  RunConfig c = ToyConfig(dir);
  c.mode = predict::MaskMode::kDpSmoothed;
  {
    Pipeline p(c, Quiet);
    p.RunAll();
  }
  const auto all = Snapshot(c.output_dir);
  fs::remove_all(c.output_dir);
  // Each stage in its own process-like instance.
  Pipeline(c, Quiet).Summarize();
  Pipeline(c, Quiet).Score();
  Pipeline(c, Quiet).FitPrior();
  Pipeline(c, Quiet).Aggregate();
  Pipeline(c, Quiet).Predict();
  Pipeline(c, Quiet).Evaluate();
  EXPECT_EQ(Snapshot(c.output_dir), all);
  EXPECT_TRUE(all.count("aggregate/loss_trace.csv"));
}

TEST(PipelineTest, ManifestCarriesHashAndSeeds) {
  const fs::path dir = FreshDir("manifest");
  RunConfig c = ToyConfig(dir);
  c.prior.seed = 77;
  Pipeline p(c, Quiet);
  p.Summarize();
  const json m = json::parse(Slurp(p.StageDir(kSummarizeStage) / "manifest.json"));
  EXPECT_EQ(m["stage"], "summarize");
  EXPECT_EQ(m["config_hash"], ConfigHash(c));
  EXPECT_EQ(m["seeds"]["prior"], 77);
  EXPECT_EQ(m["seeds"]["backend"], 5);
}

TEST(PipelineTest, MissingUpstreamNamesTheStage) {
  const fs::path dir = FreshDir("missing");
  RunConfig c = ToyConfig(dir);
  try {
    Pipeline(c, Quiet).Aggregate();
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("'score'"), std::string::npos) << e.what();
  }
  Pipeline(c, Quiet).Summarize();
  Pipeline(c, Quiet).Score();
  try {
    Pipeline(c, Quiet).Aggregate();
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("'fit-prior'"), std::string::npos) << e.what();
  }
}

TEST(PipelineTest, SkippingSummariesUsesRawText) {
  const fs::path dir = FreshDir("nosummary");
  RunConfig c = ToyConfig(dir);
  c.summarize = false;
  c.mode = predict::MaskMode::kSimpleRe;
  Pipeline p(c, Quiet);
  p.RunAll();
  EXPECT_FALSE(fs::exists(p.StageDir(kSummarizeStage) / "summaries.jsonl"));
  EXPECT_TRUE(fs::exists(p.StageDir(kEvaluateStage) / "report.json"));
}

TEST(PipelineTest, OracleCorpusWithTrueNaScoresPerfectly) {
  const fs::path dir = FreshDir("oracle");
  const auto world = testing::MakeToyWorld({4, 6, 0.3, 21});
  const auto files = testing::WriteWorld(world, dir / "in");
  testing::RiggedOptions ro;
  ro.cos_margin = 0.0;
  ro.embedding_noise = 0.0;
  ro.relation_hit_rate = 1.0;
  llm::Gateway::Options go;
  go.n_hidden = ro.n_hidden;
  auto gw = std::make_shared<llm::Gateway>(std::make_unique<testing::RiggedBackend>(world, ro), go);
  RunConfig c;
  c.corpus = files.corpus;
  c.schema = files.schema;
  c.output_dir = dir / "out";
  c.backend.n_hidden = ro.n_hidden;
  c.mode = predict::MaskMode::kTrueNa;
  c.prior.enabled = false;
  c.pooling = predict::Pooling::kPerPair;
  c.percentile = 1;
  const auto report = Pipeline(c, gw, Quiet).RunAll();
  ASSERT_GT(report.counts.gold, 0u);
  EXPECT_DOUBLE_EQ(report.f1, 1.0);
}

TEST(PipelineTest, SynthReportIsWithinTolerance) {
  const fs::path dir = FreshDir("synth");
  RunConfig c;
  c.output_dir = dir / "out";
  const json r = Pipeline(c, Quiet).Synth();
  EXPECT_TRUE(r["within_tolerance"].get<bool>());
  EXPECT_LE(r["max_abs_error"].get<double>(), 0.05);
  EXPECT_TRUE(fs::exists(dir / "out" / "synth" / "report.json"));
}

TEST(PipelineTest, PacificFairReplayRunsOffline) {
  const fs::path dir = FreshDir("pacific_fair");
  RunConfig c;
  c.corpus = kPacificFair / "corpus.json";
  c.schema = kPacificFair / "schema.json";
  c.output_dir = dir / "out";
  c.backend.kind = llm::BackendKind::kReplay;
  c.backend.model = "fixture-model";
  c.backend.n_hidden = 4;
  c.backend.cache_path = kPacificFair / "cache.jsonl";
  c.relation_specific = true;
  c.mode = predict::MaskMode::kSimpleRe;
  c.percentile = 50;
  Pipeline p(c, Quiet);
  const auto report = p.RunAll();
  EXPECT_EQ(p.gateway().stats().backend_calls, 0u);
  // Only Pacific Fair -> Queensland has a positive existence logit.
  EXPECT_DOUBLE_EQ(report.precision, 1.0);
  EXPECT_DOUBLE_EQ(report.recall, 1.0);
}

#ifdef WSRE_CLI_PATH
int RunCli(const std::string& args) {
  const std::string cmd = std::string(WSRE_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

TEST(CliTest, ExitCodes) {
  const fs::path dir = FreshDir("cli");
  const RunConfig c = ToyConfig(dir);
  const std::string base = "--corpus " + c.corpus.string() + " --schema " + c.schema.string() +
                           " --output-dir " + c.output_dir.string() + " --n-hidden 8";
  const std::string stub = " --backend stub --cache " + (dir / "cache.jsonl").string();
  EXPECT_EQ(RunCli("run-all " + base + stub + " --mode dp --percentile 10"), 0);
  EXPECT_TRUE(fs::exists(c.output_dir / "evaluate" / "report.txt"));
  EXPECT_EQ(RunCli("run-all " + base + stub + " --percentile 0"), 1);
  EXPECT_EQ(RunCli("run-all " + base + stub + " --mode oracle"), 1);
  EXPECT_EQ(RunCli("predict --corpus " + c.corpus.string() + " --schema " + c.schema.string() +
                   " --output-dir " + (dir / "empty").string()),
            1);
  EXPECT_EQ(RunCli("score " + base + " --no-summarize --backend http-scoring"
                   " --endpoint http://127.0.0.1:1/x"
                   " --max-retries 0 --cache " + (dir / "cold.jsonl").string()),
            2);
  EXPECT_EQ(RunCli("synth --output-dir " + (dir / "synth").string()), 0);
}

TEST(CliTest, NumericalFailureExitsThree) {
  const fs::path dir = FreshDir("cli_numerical");
  // Three identical existence paraphrases yield three copies of one LF.
  const RunConfig c = ToyConfig(dir);
  json cfg = json::object();
  cfg["paraphrases"] = {"Is there a relationship between {head} and {tail}",
                        "Is there a relationship between {head} and {tail}",
                        "Is there a relationship between {head} and {tail}"};
  std::ofstream(dir / "config.json") << cfg.dump();
  const std::string args = "run-all --config " + (dir / "config.json").string() + " --corpus " +
                           c.corpus.string() + " --schema " + c.schema.string() +
                           " --output-dir " + c.output_dir.string() +
                           " --backend stub --n-hidden 8 --mode dp";
  EXPECT_EQ(RunCli(args), 3);
}
#endif

}  // namespace
}  // namespace wsre::pipeline
