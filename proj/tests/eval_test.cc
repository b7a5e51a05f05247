#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "wsre/corpus.h"
#include "wsre/error.h"
#include "wsre/eval.h"
#include "wsre/util/random.h"

namespace wsre::eval {
namespace {

TripleKey K(std::size_t d, int h, int t, const std::string& r) { return {d, h, t, r}; }

corpus::Corpus SmallCorpus() {
  corpus::Corpus c;
  for (std::size_t d = 0; d < 2; ++d) {
    corpus::Document doc;
    doc.index = d;
    doc.title = "Doc " + std::to_string(d);
    doc.sentences.push_back({"a", "b", "c", "d"});
    for (int i = 0; i < 4; ++i) doc.entities.push_back({i, "PER", {{"x", 0, i, i + 1}}});
    c.documents.push_back(doc);
  }
  c.gold = {{0, 0, 1, "P1", {}}, {0, 1, 2, "P2", {}}, {1, 0, 3, "P1", {}}, {1, 2, 3, "P3", {}}};
  return c;
}

// Straight recount from the metric definitions.
EvalReport Oracle(std::vector<TripleKey> preds, std::vector<TripleKey> gold,
                  const std::set<TripleKey>& ignore) {
  std::set<TripleKey> p(preds.begin(), preds.end()), g(gold.begin(), gold.end());
  double correct = 0, ic = 0, ip = 0;
  for (const auto& k : p) {
    const bool hit = g.count(k) > 0;
    const bool ign = ignore.count(k) > 0;
    correct += hit;
    ic += hit && ign;
    ip += ign;
  }
  auto f1 = [](double pr, double re) { return pr + re > 0 ? 2 * pr * re / (pr + re) : 0.0; };
  EvalReport r;
  r.precision = p.empty() ? 0 : correct / static_cast<double>(p.size());
  r.recall = g.empty() ? 0 : correct / static_cast<double>(g.size());
  r.f1 = f1(r.precision, r.recall);
  const double kept = static_cast<double>(p.size()) - ip;
  const double ign_p = kept > 0 ? (correct - ic) / kept : 0;
  const double ign_r = g.empty() ? 0 : (correct - ic) / static_cast<double>(g.size());
  r.ign_f1 = f1(ign_p, ign_r);
  return r;
}

TEST(EvalTest, PerfectPredictions) {
  const auto c = SmallCorpus();
  const auto gold = GoldKeys(c);
  const auto r = Evaluate(gold, gold, {}, &c);
  EXPECT_EQ(r.precision, 1.0);
  EXPECT_EQ(r.recall, 1.0);
  EXPECT_EQ(r.f1, 1.0);
  EXPECT_EQ(r.ign_f1, 1.0);
}

TEST(EvalTest, HandComputedExample) {
  const auto c = SmallCorpus();
  const std::vector<TripleKey> preds = {K(0, 0, 1, "P1"), K(0, 2, 1, "P1")};
  const auto r = Evaluate(preds, GoldKeys(c), {}, &c);
  EXPECT_DOUBLE_EQ(r.precision, 0.5);
  EXPECT_DOUBLE_EQ(r.recall, 0.25);
  EXPECT_DOUBLE_EQ(r.f1, 1.0 / 3.0);
  EXPECT_EQ(r.counts.correct, 1u);
  EXPECT_EQ(r.counts.predicted, 2u);
  EXPECT_EQ(r.counts.gold, 4u);
}

TEST(EvalTest, IgnoringTheOnlyCorrectPrediction) {
  const auto c = SmallCorpus();
  const std::vector<TripleKey> preds = {K(0, 0, 1, "P1"), K(0, 2, 1, "P1")};
  const auto r = Evaluate(preds, GoldKeys(c), {K(0, 0, 1, "P1")}, &c);
  EXPECT_EQ(r.ign_f1, 0.0);
  EXPECT_EQ(r.counts.ignored_correct, 1u);
  EXPECT_EQ(r.counts.ignored_predicted, 1u);
  EXPECT_DOUBLE_EQ(r.f1, 1.0 / 3.0);
}

TEST(EvalTest, EmptyPredictionsScoreZero) {
  const auto c = SmallCorpus();
  const auto r = Evaluate(std::vector<TripleKey>{}, GoldKeys(c), {}, &c);
  EXPECT_EQ(r.precision, 0.0);
  EXPECT_EQ(r.recall, 0.0);
  EXPECT_EQ(r.f1, 0.0);
}

TEST(EvalTest, RejectsUnknownReferences) {
  const auto c = SmallCorpus();
  const auto gold = GoldKeys(c);
  EXPECT_THROW(Evaluate(std::vector<TripleKey>{K(5, 0, 1, "P1")}, gold, {}, &c), ValidationError);
  EXPECT_THROW(Evaluate(std::vector<TripleKey>{K(0, 0, 9, "P1")}, gold, {}, &c), ValidationError);
  EXPECT_THROW(Evaluate(std::vector<TripleKey>{K(0, 2, 2, "P1")}, gold, {}, &c), ValidationError);
}

TEST(EvalTest, OrderAndDuplicatesDoNotMatter) {
  const auto c = SmallCorpus();
  std::vector<TripleKey> preds = {K(0, 0, 1, "P1"), K(1, 2, 3, "P3"), K(1, 0, 1, "P2")};
  const auto base = Evaluate(preds, GoldKeys(c), {}, &c);
  std::reverse(preds.begin(), preds.end());
  preds.push_back(preds[0]);
  preds.push_back(preds[1]);
  const auto shuffled = Evaluate(preds, GoldKeys(c), {}, &c);
  EXPECT_EQ(ReportToJson(base), ReportToJson(shuffled));
}

TEST(EvalTest, MatchesBruteForceRecount) {
  Rng rng(12);
  const std::vector<std::string> rels = {"P1", "P2", "P3"};
  auto random_key = [&] {
    const int h = static_cast<int>(rng.Below(4));
    int t = static_cast<int>(rng.Below(3));
    if (t >= h) ++t;
    return K(rng.Below(2), h, t, rels[rng.Below(3)]);
  };
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<TripleKey> preds, gold;
    std::set<TripleKey> ignore;
    for (std::size_t i = 0, n = rng.Below(12); i < n; ++i) preds.push_back(random_key());
    for (std::size_t i = 0, n = rng.Below(12); i < n; ++i) gold.push_back(random_key());
    for (std::size_t i = 0, n = rng.Below(5); i < n; ++i) ignore.insert(random_key());
    const auto got = Evaluate(preds, gold, ignore);
    const auto want = Oracle(preds, gold, ignore);
    EXPECT_NEAR(got.precision, want.precision, 1e-12);
    EXPECT_NEAR(got.recall, want.recall, 1e-12);
    EXPECT_NEAR(got.f1, want.f1, 1e-12);
    EXPECT_NEAR(got.ign_f1, want.ign_f1, 1e-12);
    EXPECT_NEAR(got.f1, F1(got.precision, got.recall), 1e-15);
  }
}

TEST(EvalTest, TriplesAgainstCorpus) {
  const auto c = SmallCorpus();
  const std::vector<predict::Triple> triples = {{0, 0, 1, "P1", 0.9}, {1, 2, 3, "P3", 0.1}};
  const auto r = Evaluate(triples, c);
  EXPECT_DOUBLE_EQ(r.precision, 1.0);
  EXPECT_DOUBLE_EQ(r.recall, 0.5);
}

TEST(IgnoreSetTest, TitlesMapToDocuments) {
  const auto c = SmallCorpus();
  const auto j = nlohmann::json::parse(R"([
    {"title": "Doc 1", "h_idx": 2, "t_idx": 3, "r": "P3"},
    {"title": "Unknown", "h_idx": 0, "t_idx": 1, "r": "P1"}])");
  const auto ignore = ParseIgnoreSet(j, c);
  EXPECT_EQ(ignore, (std::set<TripleKey>{K(1, 2, 3, "P3")}));
}

TEST(FormatTest, FixedPrecisionRows) {
  EvalReport perfect;
  perfect.precision = perfect.recall = perfect.f1 = perfect.ign_f1 = 1.0;
  const std::vector<ReportRow> one = {{"", perfect}};
  EXPECT_EQ(FormatTable(one), "F1 Ign_F1 Precision Recall\n1.0000 1.0000 1.0000 1.0000\n");

  EvalReport r;
  r.f1 = 0.102232;
  const std::vector<ReportRow> pct = {{"", r}};
  EXPECT_NE(FormatTable(pct, true).find("10.2232 "), std::string::npos);

  EXPECT_EQ(FormatTable({}), "F1 Ign_F1 Precision Recall\n");

  const std::vector<ReportRow> named = {{"dp", perfect}, {"true_na", r}};
  EXPECT_EQ(FormatTable(named),
            "         F1 Ign_F1 Precision Recall\n"
            "dp       1.0000 1.0000 1.0000 1.0000\n"
            "true_na  0.1022 0.0000 0.0000 0.0000\n");
}

TEST(FormatTest, ReportJsonShape) {
  EvalReport r;
  r.counts.correct = 3;
  const auto j = ReportToJson(r);
  for (const char* k : {"precision", "recall", "f1", "ign_f1", "counts"}) EXPECT_TRUE(j.contains(k));
  EXPECT_EQ(j["counts"]["correct"], 3);
}

}  // namespace
}  // namespace wsre::eval
