#include "wsre/eval.h"

#include <algorithm>
#include <cstdio>
#include <map>

#include "wsre/error.h"

namespace wsre::eval {
namespace {

double Ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

void CheckPrediction(const TripleKey& t, const corpus::Corpus& corpus) {
  if (t.doc_index >= corpus.documents.size()) {
    throw ValidationError("prediction refers to unknown document " + std::to_string(t.doc_index));
  }
  const auto n = static_cast<int>(corpus.documents[t.doc_index].entities.size());
  for (int e : {t.head, t.tail}) {
    if (e < 0 || e >= n) {
      throw ValidationError("prediction refers to unknown entity " + std::to_string(e) +
                            " in document " + std::to_string(t.doc_index));
    }
  }
  if (t.head == t.tail) {
    throw ValidationError("prediction has head == tail in document " +
                          std::to_string(t.doc_index));
  }
}

std::string Fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

}  // namespace

double F1(double precision, double recall) {
  return precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

EvalReport Evaluate(std::span<const TripleKey> predictions, std::span<const TripleKey> gold,
                    const std::set<TripleKey>& ignore, const corpus::Corpus* corpus) {
  if (corpus) {
    for (const auto& p : predictions) CheckPrediction(p, *corpus);
  }
  const std::set<TripleKey> pred_set(predictions.begin(), predictions.end());
  const std::set<TripleKey> gold_set(gold.begin(), gold.end());

  EvalReport r;
  r.counts.predicted = pred_set.size();
  r.counts.gold = gold_set.size();
  for (const auto& p : pred_set) {
    const bool correct = gold_set.count(p) > 0;
    const bool ignored = ignore.count(p) > 0;
    r.counts.correct += correct;
    r.counts.ignored_predicted += ignored;
    r.counts.ignored_correct += correct && ignored;
  }
  r.precision = Ratio(r.counts.correct, r.counts.predicted);
  r.recall = Ratio(r.counts.correct, r.counts.gold);
  r.f1 = F1(r.precision, r.recall);

  const std::size_t ign_correct = r.counts.correct - r.counts.ignored_correct;
  const std::size_t ign_predicted = r.counts.predicted - r.counts.ignored_predicted;
  r.ign_f1 = F1(Ratio(ign_correct, ign_predicted), Ratio(ign_correct, r.counts.gold));
  return r;
}

std::vector<TripleKey> GoldKeys(const corpus::Corpus& corpus) {
  std::vector<TripleKey> out;
  out.reserve(corpus.gold.size());
  for (const auto& g : corpus.gold) out.push_back({g.doc_index, g.head, g.tail, g.relation_id});
  return out;
}

EvalReport Evaluate(std::span<const predict::Triple> predictions, const corpus::Corpus& corpus,
                    const std::set<TripleKey>& ignore) {
  std::vector<TripleKey> keys;
  keys.reserve(predictions.size());
  for (const auto& t : predictions) keys.push_back({t.doc_index, t.head, t.tail, t.relation_id});
  const auto gold = GoldKeys(corpus);
  return Evaluate(keys, gold, ignore, &corpus);
}

std::set<TripleKey> ParseIgnoreSet(const nlohmann::json& j, const corpus::Corpus& corpus) {
  if (!j.is_array()) throw ParseError("ignore set must be a JSON array");
  std::multimap<std::string, std::size_t> by_title;
  for (const auto& d : corpus.documents) by_title.emplace(d.title, d.index);
  std::set<TripleKey> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    try {
      const auto& e = j[i];
      const auto title = e.at("title").get<std::string>();
      const int h = e.at("h_idx").get<int>();
      const int t = e.at("t_idx").get<int>();
      const auto r = e.at("r").get<std::string>();
      auto [lo, hi] = by_title.equal_range(title);
      for (auto it = lo; it != hi; ++it) out.insert({it->second, h, t, r});
    } catch (const nlohmann::json::exception& ex) {
      throw ParseError("malformed ignore-set entry " + std::to_string(i) + ": " + ex.what());
    }
  }
  return out;
}

std::set<TripleKey> LoadIgnoreSet(const std::filesystem::path& path,
                                  const corpus::Corpus& corpus) {
  const std::string text = corpus::ReadFile(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("cannot parse ignore set " + path.string() + ": " + e.what());
  }
  return ParseIgnoreSet(j, corpus);
}

std::string FormatTable(std::span<const ReportRow> rows, bool as_percent) {
  std::size_t width = 0;
  for (const auto& row : rows) width = std::max(width, row.name.size());
  auto pad = [&](const std::string& s) {
    return width == 0 ? std::string() : s + std::string(width - s.size() + 2, ' ');
  };
  const double scale = as_percent ? 100.0 : 1.0;

  std::string out = pad("") + "F1 Ign_F1 Precision Recall\n";
  for (const auto& row : rows) {
    const auto& r = row.report;
    out += pad(row.name) + Fixed4(r.f1 * scale) + " " + Fixed4(r.ign_f1 * scale) + " " +
           Fixed4(r.precision * scale) + " " + Fixed4(r.recall * scale) + "\n";
  }
  return out;
}

nlohmann::json ReportToJson(const EvalReport& report) {
  const auto& c = report.counts;
  return {{"precision", report.precision},
          {"recall", report.recall},
          {"f1", report.f1},
          {"ign_f1", report.ign_f1},
          {"counts",
           {{"correct", c.correct},
            {"predicted", c.predicted},
            {"gold", c.gold},
            {"ignored_correct", c.ignored_correct},
            {"ignored_predicted", c.ignored_predicted}}}};
}

}  // namespace wsre::eval
