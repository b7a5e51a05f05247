#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <thread>
#include <vector>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "wsre/corpus.h"
#include "wsre/error.h"
#include "wsre/llm/backends.h"
#include "wsre/llm/cache.h"
#include "wsre/llm/gateway.h"
#include "wsre/llm/prompts.h"
#include "wsre/scoring.h"

namespace wsre::llm {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

const fs::path kPacificFair = fs::path(WSRE_TEST_DATA_DIR) / "pacific_fair";

fs::path TmpFile(const std::string& name) {
  const fs::path dir = fs::path(WSRE_TEST_TMP_DIR) / "llm";
  fs::create_directories(dir);
  const fs::path p = dir / name;
  fs::remove(p);
  return p;
}

// Scripted backend with call counting, optional transient failures and an
// artificial delay.
class FakeBackend : public Backend {
 public:
  std::atomic<int> calls{0};
  int fail_first = 0;
  bool logits = true;
  std::chrono::milliseconds delay{0};
  std::string text = "yes, it is";
  std::vector<std::vector<double>> tokens;

  std::string_view kind() const override { return "fake"; }
  bool Supports(Capability c) const override {
    return c != Capability::kYesNoLogits || logits;
  }
  BackendResponse Call(Capability, std::string_view) override {
    const int n = calls.fetch_add(1);
    if (delay.count() > 0) std::this_thread::sleep_for(delay);
    if (n < fail_first) throw TransportError("transient");
    BackendResponse r;
    r.text = text;
    r.yes_logit = 2.0;
    r.no_logit = 0.5;
    r.token_embeddings = tokens;
    return r;
  }
};

Gateway::Options FastOptions(int n_hidden = 2) {
  Gateway::Options o;
  o.model = "m";
  o.n_hidden = n_hidden;
  o.retry.backoff = std::chrono::milliseconds(1);
  return o;
}

TEST(PromptTest, SummarizePromptIsExact) {
  EXPECT_EQ(SummarizePrompt("Doc text.", "Pacific Fair"),
            "Based on the given paragraph, summarize the information about "
            "\"Pacific Fair\"\nDoc text.");
}

TEST(PromptTest, BuildContextDropsEmptySides) {
  EXPECT_EQ(BuildContext("A.", "B."), "A. B.");
  EXPECT_EQ(BuildContext("", "B."), "B.");
  EXPECT_EQ(BuildContext("A.", ""), "A.");
  EXPECT_EQ(BuildContext("", ""), "");
}

TEST(PromptTest, ScoringPromptsMatchQuestionShapes) {
  EXPECT_EQ(ScoringPrompt("Is {head} an instance of {tail}?", "Pacific Fair", "Queensland",
                          "<context>"),
            "Is \"Pacific Fair\" an instance of \"Queensland\" <context> ?");
  EXPECT_EQ(OpenEndedPrompt("A", "B", "ctx"), "What's the relationship between \"A\" and \"B\" ctx ?");
  EXPECT_EQ(ScoringPrompt(DefaultExistenceParaphrases()[2], "A", "B", "ctx"),
            "Does \"A\" have any connection to \"B\" ctx ?");
  EXPECT_EQ(DefaultExistenceParaphrases().size(), 3u);
  EXPECT_EQ(DefaultExistenceParaphrases()[0], "Is there a relationship between {head} and {tail}");
  EXPECT_EQ(DefaultExistenceParaphrases()[1],
            "Is there a direct relationship between {head} and {tail}");
}

TEST(MeanPoolTest, MeanOfOneAndSymmetricPair) {
  const std::vector<std::vector<double>> one = {{0.3, -1.0, 2.0}};
  EXPECT_EQ(MeanPool(one), one[0]);
  const std::vector<std::vector<double>> sym = {{0.3, -1.0, 2.0}, {-0.3, 1.0, -2.0}};
  for (double x : MeanPool(sym)) EXPECT_DOUBLE_EQ(x, 0.0);
  const std::vector<std::vector<double>> ragged = {{1.0}, {1.0, 2.0}};
  EXPECT_THROW(MeanPool(ragged), ValidationError);
}

TEST(TextMatchTest, LeadingYesOrNo) {
  EXPECT_EQ(TextMatchScore("Yes, it is."), 1.0);
  EXPECT_EQ(TextMatchScore("  NO"), -1.0);
  EXPECT_EQ(TextMatchScore("Maybe"), 0.0);
  EXPECT_EQ(TextMatchScore(""), 0.0);
}

TEST(StubTest, DeterministicAndWithinContract) {
  Gateway a(std::make_unique<StubBackend>(3, 16), FastOptions(16));
  Gateway b(std::make_unique<StubBackend>(3, 16), FastOptions(16));
  Gateway c(std::make_unique<StubBackend>(4, 16), FastOptions(16));
  const double la = a.YesNoLogit("prompt");
  EXPECT_EQ(la, b.YesNoLogit("prompt"));
  EXPECT_NE(la, c.YesNoLogit("prompt"));
  EXPECT_GE(la, -3.0);
  EXPECT_LE(la, 3.0);
  EXPECT_EQ(a.Summarize("doc", "e").text, b.Summarize("doc", "e").text);

  const auto v = a.EmbedText("located in");
  EXPECT_EQ(v, b.EmbedText("located in"));
  ASSERT_EQ(v.size(), 16u);
  double norm = 0.0;
  for (double x : v) norm += x * x;
  EXPECT_NEAR(norm, 1.0, 1e-12);
  EXPECT_NE(v, a.EmbedText("country"));

  const auto g = a.GenerateWithEmbedding("q");
  EXPECT_EQ(g.embedding, b.GenerateWithEmbedding("q").embedding);
  EXPECT_FALSE(g.text.empty());
}

TEST(StubTest, LogitsSpreadOverRange) {
  StubBackend stub(0, 4);
  double lo = 3.0, hi = -3.0;
  for (int i = 0; i < 500; ++i) {
    const auto r = stub.Call(Capability::kYesNoLogits, "p" + std::to_string(i));
    const double v = *r.yes_logit - *r.no_logit;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  EXPECT_LT(lo, -2.5);
  EXPECT_GT(hi, 2.5);
}

TEST(GatewayTest, YesNoIsDifferenceOfLogits) {
  auto backend = std::make_unique<FakeBackend>();
  Gateway gw(std::move(backend), FastOptions());
  EXPECT_DOUBLE_EQ(gw.YesNoLogit("p"), 1.5);
}

TEST(GatewayTest, CacheHitMakesNoBackendCall) {
  auto backend = std::make_unique<FakeBackend>();
  FakeBackend* raw = backend.get();
  Gateway gw(std::move(backend), FastOptions());
  const double first = gw.YesNoLogit("p");
  const double second = gw.YesNoLogit("p");
  EXPECT_EQ(first, second);
  EXPECT_EQ(raw->calls.load(), 1);
  EXPECT_EQ(gw.stats().cache_hits, 1u);
}

TEST(GatewayTest, PersistentCacheRoundTrip) {
  const fs::path path = TmpFile("roundtrip.jsonl");
  std::string first;
  {
    Gateway gw(std::make_unique<StubBackend>(1, 8), FastOptions(8),
               std::make_shared<ResponseCache>(path));
    first = gw.Summarize("text", "E").text;
  }
  auto backend = std::make_unique<FakeBackend>();
  FakeBackend* raw = backend.get();
  Gateway::Options opts = FastOptions(8);
  opts.cache_kind = "stub";
  Gateway replay(std::move(backend), opts, std::make_shared<ResponseCache>(path));
  EXPECT_EQ(replay.Summarize("text", "E").text, first);
  EXPECT_EQ(raw->calls.load(), 0);
}

TEST(CacheTest, LookupVerifiesFullKey) {
  ResponseCache cache;
  const CacheKey key{"stub", "m", Capability::kText, "prompt"};
  CompletionResult r;
  r.text = "x";
  r.embedding = std::vector<double>{0.1, 0.2};
  cache.Store(key, r);
  EXPECT_EQ(cache.Lookup(key), r);
  EXPECT_FALSE(cache.Lookup({"stub", "m", Capability::kText, "prompt2"}));
  EXPECT_FALSE(cache.Lookup({"stub", "other", Capability::kText, "prompt"}));
  EXPECT_FALSE(cache.Lookup({"stub", "m", Capability::kEmbedText, "prompt"}));
  EXPECT_EQ(ResultFromJson(ResultToJson(r)), r);
}

TEST(CacheTest, FileIsAppendOnlyJsonLines) {
  const fs::path path = TmpFile("append.jsonl");
  {
    ResponseCache cache(path);
    cache.Store({"stub", "m", Capability::kText, "a"}, {"A", {}, {}, {}});
  }
  {
    ResponseCache cache(path);
    EXPECT_EQ(cache.size(), 1u);
    cache.Store({"stub", "m", Capability::kText, "b"}, {"B", {}, {}, {}});
  }
  std::ifstream in(path);
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) {
    const json j = json::parse(line);
    EXPECT_TRUE(j.contains("key"));
    EXPECT_TRUE(j.contains("prompt"));
    EXPECT_TRUE(j.contains("capability"));
    EXPECT_TRUE(j.contains("result"));
    ++lines;
  }
  EXPECT_EQ(lines, 2);
  ResponseCache reloaded(path);
  EXPECT_EQ(reloaded.Lookup({"stub", "m", Capability::kText, "b"})->text, "B");
}

TEST(GatewayTest, RetriesTransientFailures) {
  auto backend = std::make_unique<FakeBackend>();
  backend->fail_first = 2;
  FakeBackend* raw = backend.get();
  Gateway gw(std::move(backend), FastOptions());
  EXPECT_DOUBLE_EQ(gw.YesNoLogit("p"), 1.5);
  EXPECT_EQ(raw->calls.load(), 3);
  EXPECT_EQ(gw.stats().retries, 2u);
}

TEST(GatewayTest, GivesUpAfterRetryBudget) {
  auto backend = std::make_unique<FakeBackend>();
  backend->fail_first = 10;
  FakeBackend* raw = backend.get();
  Gateway gw(std::move(backend), FastOptions());
  EXPECT_THROW(gw.YesNoLogit("p"), TransportError);
  EXPECT_EQ(raw->calls.load(), 3);
}

TEST(GatewayTest, MissingLogitsIsCapabilityErrorUnlessFallback) {
  auto backend = std::make_unique<FakeBackend>();
  backend->logits = false;
  Gateway strict(std::move(backend), FastOptions());
  EXPECT_THROW(strict.YesNoLogit("p"), CapabilityError);

  auto backend2 = std::make_unique<FakeBackend>();
  backend2->logits = false;
  Gateway::Options opts = FastOptions();
  opts.text_fallback = true;
  Gateway lenient(std::move(backend2), opts);
  const YesNoScore s = lenient.ScoreYesNo("p");
  EXPECT_EQ(s.value, 1.0);
  EXPECT_TRUE(s.degraded);
}

TEST(GatewayTest, EmptySummaryIsDegraded) {
  auto backend = std::make_unique<FakeBackend>();
  backend->text = "  \n";
  Gateway gw(std::move(backend), FastOptions());
  const Summary s = gw.Summarize("doc", "E");
  EXPECT_TRUE(s.degraded);
  EXPECT_TRUE(s.text.empty());
}

TEST(GatewayTest, PoolsTokenEmbeddingsAndChecksWidth) {
  auto backend = std::make_unique<FakeBackend>();
  backend->tokens = {{1.0, 2.0}, {3.0, 4.0}};
  Gateway gw(std::move(backend), FastOptions(2));
  EXPECT_EQ(gw.GenerateWithEmbedding("p").embedding, (std::vector<double>{2.0, 3.0}));

  auto backend2 = std::make_unique<FakeBackend>();
  backend2->tokens = {{1.0, 2.0, 3.0}};
  Gateway narrow(std::move(backend2), FastOptions(2));
  EXPECT_THROW(narrow.GenerateWithEmbedding("p"), ValidationError);
}

TEST(GatewayTest, InFlightNeverExceedsBound) {
  auto backend = std::make_unique<FakeBackend>();
  backend->delay = std::chrono::milliseconds(5);
  Gateway::Options opts = FastOptions();
  opts.max_in_flight = 3;
  Gateway gw(std::move(backend), opts);
  scoring::ParallelFor(60, 12, [&](std::size_t i) { gw.YesNoLogit("p" + std::to_string(i)); });
  EXPECT_LE(gw.stats().max_in_flight_observed, 3);
  EXPECT_GE(gw.stats().max_in_flight_observed, 2);
  EXPECT_EQ(gw.stats().backend_calls, 60u);
}

TEST(ConfigTest, ValidatesBackendConfig) {
  BackendConfig c;
  c.n_hidden = 0;
  EXPECT_THROW(ValidateConfig(c), ValidationError);
  c = BackendConfig{};
  c.kind = BackendKind::kReplay;
  EXPECT_THROW(ValidateConfig(c), ValidationError);
  c = BackendConfig{};
  c.kind = BackendKind::kHttpScoring;
  EXPECT_THROW(ValidateConfig(c), ValidationError);
  c.endpoint = "ftp://host/x";
  EXPECT_THROW(MakeBackend(c), ValidationError);
  EXPECT_EQ(ParseBackendKind("http-chat"), BackendKind::kHttpChat);
  EXPECT_FALSE(ParseBackendKind("gpt"));
}

TEST(HttpTest, SplitsUrls) {
  const HttpTarget t = SplitUrl("https://api.example.com:8443/v1/chat/completions");
  EXPECT_EQ(t.scheme_host_port, "https://api.example.com:8443");
  EXPECT_EQ(t.path, "/v1/chat/completions");
  EXPECT_THROW(SplitUrl("api.example.com"), ValidationError);
}

TEST(HttpTest, ChatWireFormat) {
  BackendConfig c;
  c.kind = BackendKind::kHttpChat;
  c.endpoint = "http://localhost:1/v1/chat/completions";
  c.model = "gpt";
  ChatBackend chat(c);
  EXPECT_EQ(chat.RequestBody("hi"),
            json::parse(R"({"model":"gpt","messages":[{"role":"user","content":"hi"}]})"));
  EXPECT_FALSE(chat.Supports(Capability::kYesNoLogits));
  const auto r = ChatBackend::ParseResponse(
      json::parse(R"({"choices":[{"message":{"content":"A summary."}}]})"));
  EXPECT_EQ(r.text, "A summary.");
  EXPECT_THROW(ChatBackend::ParseResponse(json::object()), TransportError);
}

TEST(HttpTest, ScoringWireFormat) {
  BackendConfig c;
  c.kind = BackendKind::kHttpScoring;
  c.endpoint = "http://localhost:1/score";
  c.model = "m";
  ScoringBackend scoring(c);
  const json body = scoring.RequestBody(Capability::kYesNoLogits, "Is it?");
  EXPECT_EQ(body["model"], "m");
  EXPECT_EQ(body["prompt"], "Is it?");
  EXPECT_EQ(body["want"], json::array({"yes_no_logits"}));
  const auto r = ScoringBackend::ParseResponse(
      json::parse(R"({"text":"yes","yes_logit":2.0,"no_logit":0.5,"embedding":[1,2]})"));
  EXPECT_EQ(*r.yes_logit, 2.0);
  EXPECT_EQ(*r.no_logit, 0.5);
  EXPECT_EQ(*r.embedding, (std::vector<double>{1, 2}));
  EXPECT_THROW(ScoringBackend::ParseResponse(json::parse(R"({"yes_logit":"x"})")),
               TransportError);
}

TEST(HttpTest, UnreachableServerIsTransportError) {
  BackendConfig c;
  c.kind = BackendKind::kHttpScoring;
  c.endpoint = "http://127.0.0.1:1/score";
  c.timeout = std::chrono::milliseconds(500);
  ScoringBackend scoring(c);
  EXPECT_THROW(scoring.Call(Capability::kText, "x"), TransportError);
}

// The Pacific Fair document served entirely from recorded responses.
class PacificFairReplay : public ::testing::Test {
 protected:
  void SetUp() override {
    corpus_ = corpus::LoadCorpus(kPacificFair / "corpus.json");
    BackendConfig c;
    c.kind = BackendKind::kReplay;
    c.model = "fixture-model";
    c.n_hidden = 4;
    c.recorded_kind = "http-scoring";
    c.cache_path = kPacificFair / "cache.jsonl";
    gateway_ = MakeGateway(c);
  }
  corpus::Corpus corpus_;
  std::unique_ptr<Gateway> gateway_;
};

TEST_F(PacificFairReplay, SummaryMentionsKeyFacts) {
  const auto& doc = corpus_.documents[0];
  const Summary s = gateway_->Summarize(doc.Text(), "Pacific Fair");
  EXPECT_FALSE(s.degraded);
  EXPECT_NE(s.text.find("shopping centre"), std::string::npos);
  EXPECT_NE(s.text.find("Broadbeach"), std::string::npos);
  EXPECT_NE(s.text.find("1977"), std::string::npos);
}

TEST_F(PacificFairReplay, GoldenContextAndScores) {
  const auto& doc = corpus_.documents[0];
  const std::string head = gateway_->Summarize(doc.Text(), "Pacific Fair").text;
  const std::string tail = gateway_->Summarize(doc.Text(), "Queensland").text;
  const std::string context = BuildContext(head, tail);
  EXPECT_EQ(context,
            "Pacific Fair is a major shopping centre in Broadbeach Waters on the Gold Coast, "
            "Queensland, Australia. It was developed by Hooker Retail Developments and opened "
            "in 1977. Queensland is an Australian state whose Gold Coast hosts Pacific Fair, its "
            "largest regional shopping centre until 2006.");

  const std::string sr_prompt = ScoringPrompt(
      "Is {head} located in the administrative territorial entity {tail}?", "Pacific Fair",
      "Queensland", context);
  EXPECT_DOUBLE_EQ(gateway_->YesNoLogit(sr_prompt), 2.25);

  const std::vector<double> oe =
      gateway_->GenerateWithEmbedding(OpenEndedPrompt("Pacific Fair", "Queensland", context))
          .embedding;
  EXPECT_EQ(oe, (std::vector<double>{0.5, 0.75, 0.25, 0.0}));
  EXPECT_EQ(gateway_->EmbedText("located in the administrative territorial entity"),
            (std::vector<double>{0.6, 0.8, 0.0, 0.0}));

  std::vector<double> re;
  for (const auto& p : DefaultExistenceParaphrases()) {
    re.push_back(gateway_->YesNoLogit(ScoringPrompt(p, "Pacific Fair", "Queensland", context)));
  }
  EXPECT_EQ(re, (std::vector<double>{2.5, 1.25, 1.0}));
  EXPECT_EQ(gateway_->stats().backend_calls, 0u);
}

TEST_F(PacificFairReplay, UnrecordedPromptFails) {
  EXPECT_THROW(gateway_->YesNoLogit("never recorded"), TransportError);
}

}  // namespace
}  // namespace wsre::llm
