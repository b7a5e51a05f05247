#ifndef WSRE_SCORING_H_
#define WSRE_SCORING_H_

// The three weak score families computed per entity pair: relation-specific
// yes/no logits, open-ended answer embedding similarity to relation names,
// and relation-existence logits under several paraphrases.

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "wsre/corpus.h"
#include "wsre/llm/gateway.h"

namespace wsre::scoring {

struct PairScores {
  corpus::EntityPair pair;
  // One per positive relation; nullopt entries failed after retries. Empty
  // when the relation-specific path is disabled.
  std::vector<std::optional<double>> sr_logits;
  std::vector<double> oe_embedding;
  std::vector<double> cos_sims;
  std::vector<double> re_logits;
  // Mean of sr_logits; unset when disabled or any entry is missing.
  std::optional<double> mean_sr;
  double mean_cos = 0.0;
  // False when a required prompt failed; the pair is kept in outputs but
  // excluded from label-model fitting.
  bool scored = true;
  std::vector<std::string> flags;
};

// Strictly a distribution over positive relations.
struct RelationDistribution {
  std::vector<double> probs;
};

// Names and context for one pair's prompts.
struct PairPrompt {
  std::string head;
  std::string tail;
  std::string context;
};

// Relation-specific logits, one per schema relation. A relation whose
// prompt fails after retries yields nullopt; capability errors propagate.
std::vector<std::optional<double>> ScoreRelationSpecific(
    const PairPrompt& pair, const corpus::RelationSchema& schema,
    llm::Gateway& gateway, std::vector<std::string>* flags = nullptr);

// Mean-pooled answer embedding for the open-ended question.
std::vector<double> ScoreOpenEnded(const PairPrompt& pair, llm::Gateway& gateway);

// Rows are relations, columns the embedding width.
Eigen::MatrixXd EmbedRelations(const corpus::RelationSchema& schema,
                               llm::Gateway& gateway);

struct Similarities {
  std::vector<double> cos_sims;
  // E_OE had zero norm; all similarities are zero.
  bool degenerate = false;
};

// cos_sims[r] = <e, rels.row(r)> / (|e| |rels.row(r)|), clamped to [-1, 1].
// Throws ValidationError on width mismatch or a zero-norm relation row.
Similarities RelationSimilarities(std::span<const double> embedding,
                                  const Eigen::MatrixXd& relation_embeddings);

// One logit per paraphrase template.
std::vector<double> ScoreRelationExistence(
    const PairPrompt& pair, std::span<const std::string> paraphrases,
    llm::Gateway& gateway, std::vector<std::string>* flags = nullptr);

// Softmax at temperature 1, max-shifted.
RelationDistribution NormalizeScores(std::span<const double> raw);

struct ScoreOptions {
  bool relation_specific = false;
  std::vector<std::string> paraphrases;  // empty -> defaults
  // Worker threads; the gateway separately bounds in-flight requests.
  int workers = 4;
};

// Context string for a pair; supplied by the caller (summaries or raw text).
using ContextFn = std::function<std::string(const corpus::EntityPair&)>;

// Scores every ordered pair of every document. Results are in
// EnumerateCorpusPairs order regardless of scheduling.
std::vector<PairScores> ScoreCorpus(const corpus::Corpus& corpus,
                                    const corpus::RelationSchema& schema,
                                    const Eigen::MatrixXd& relation_embeddings,
                                    const ContextFn& context,
                                    llm::Gateway& gateway,
                                    const ScoreOptions& options);

// Runs fn(i) for i in [0, n) on up to `workers` threads. The first
// exception thrown by any task is rethrown after all workers stop.
void ParallelFor(std::size_t n, int workers,
                 const std::function<void(std::size_t)>& fn);

}  // namespace wsre::scoring

#endif  // WSRE_SCORING_H_
