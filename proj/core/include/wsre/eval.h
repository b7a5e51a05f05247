#ifndef WSRE_EVAL_H_
#define WSRE_EVAL_H_

// Micro precision / recall / F1 and Ign F1 over exact (doc, head, tail,
// relation) matches.

#include <compare>
#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wsre/corpus.h"
#include "wsre/predict.h"

namespace wsre::eval {

struct TripleKey {
  std::size_t doc_index = 0;
  int head = 0;
  int tail = 0;
  std::string relation_id;

  friend auto operator<=>(const TripleKey&, const TripleKey&) = default;
};

struct Counts {
  std::size_t correct = 0;
  std::size_t predicted = 0;
  std::size_t gold = 0;
  std::size_t ignored_correct = 0;    // correct triples in the ignore set
  std::size_t ignored_predicted = 0;  // predicted triples in the ignore set
};

struct EvalReport {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double ign_f1 = 0.0;
  Counts counts;
};

// Harmonic mean; 0 when p + r == 0.
double F1(double precision, double recall);

// Predictions and gold are deduplicated first. P = correct / predicted
// (0 when nothing is predicted), R = correct / gold. Ign F1 uses the same
// formulas after removing ignore-set triples from the correct and
// predicted sets. With a corpus, every prediction must name a known
// document and in-range, distinct entities (ValidationError otherwise).
EvalReport Evaluate(std::span<const TripleKey> predictions,
                    std::span<const TripleKey> gold,
                    const std::set<TripleKey>& ignore = {},
                    const corpus::Corpus* corpus = nullptr);

// Convenience over a loaded corpus and prediction triples.
EvalReport Evaluate(std::span<const predict::Triple> predictions,
                    const corpus::Corpus& corpus,
                    const std::set<TripleKey>& ignore = {});

std::vector<TripleKey> GoldKeys(const corpus::Corpus& corpus);

// JSON array of {title, h_idx, t_idx, r}. Entries whose title is not in the
// corpus cannot match anything and are skipped.
std::set<TripleKey> ParseIgnoreSet(const nlohmann::json& j,
                                   const corpus::Corpus& corpus);
std::set<TripleKey> LoadIgnoreSet(const std::filesystem::path& path,
                                  const corpus::Corpus& corpus);

struct ReportRow {
  std::string name;
  EvalReport report;
};

// Columns F1, Ign F1, Precision, Recall with 4 decimals; as_percent
// multiplies by 100. Rows with an empty name are the bare numbers.
std::string FormatTable(std::span<const ReportRow> rows, bool as_percent = false);

// {precision, recall, f1, ign_f1, counts: {...}}
nlohmann::json ReportToJson(const EvalReport& report);

}  // namespace wsre::eval

#endif  // WSRE_EVAL_H_
