#ifndef WSRE_PREDICT_H_
#define WSRE_PREDICT_H_

// Final multi-label triple selection: percentile candidate selection over
// fused relation distributions, then one of the existence masks.

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "wsre/corpus.h"
#include "wsre/prior.h"
#include "wsre/scoring.h"

namespace wsre::predict {

enum class MaskMode {
  kSimpleRe,         // mean existence logit >= threshold
  kMajorityVote,     // majority-vote label == +1
  kDataProgramming,  // label-model posterior > 0.5
  kDpSmoothed,       // logistic smoothing of the posterior > 0.5
  kTrueNa,           // pair has a gold relation (oracle)
};

std::string_view MaskModeName(MaskMode m);  // simple_re, mv, dp, ...
std::optional<MaskMode> ParseMaskMode(std::string_view name);

struct Candidate {
  corpus::EntityPair pair;
  std::size_t pair_index = 0;  // row in the pair list it came from
  std::size_t relation = 0;    // schema index
  std::string relation_id;
  double confidence = 0.0;     // fused distribution value
};

struct Triple {
  std::size_t doc_index = 0;
  int head = 0;
  int tail = 0;
  std::string relation_id;
  double confidence = 0.0;
};

struct PredictionSet {
  MaskMode mode = MaskMode::kSimpleRe;
  std::vector<Triple> triples;
  std::vector<std::string> warnings;
};

// Relation distribution per pair: softmax of the raw scores mixed with the
// prior row for the pair's types (skipped when prior is null). Pairs with
// no raw scores get an empty distribution and produce no candidates.
std::vector<std::vector<double>> FuseDistributions(
    std::span<const scoring::PairScores> scores,
    const prior::TypeRelationPrior* prior, bool use_sr_logits = false);

enum class Pooling {
  kGlobal,   // one percentile over every (pair, relation) value
  kPerPair,  // a separate percentile within each pair
};

// Keeps every value >= the (100 - p)th percentile of its pool; boundary ties
// are all kept. Output is ordered by pair, then relation. Throws
// ValidationError for p outside (0, 100] or a distribution whose width
// differs from the schema.
std::vector<Candidate> SelectTopPercentile(
    std::span<const corpus::EntityPair> pairs,
    std::span<const std::vector<double>> distributions,
    const corpus::RelationSchema& schema, double p,
    Pooling pooling = Pooling::kGlobal);

// pair_logits[i] is the mean existence logit of pair i, NaN if missing.
PredictionSet SimpleReMask(std::span<const Candidate> candidates,
                           std::span<const double> pair_logits,
                           double threshold = 0.0);

// For kMajorityVote pair_values holds +1/-1 labels (kept when > 0); for
// the two label-model modes it holds probabilities (kept when > 0.5). NaN
// entries drop their candidates with a warning.
PredictionSet ModelMask(std::span<const Candidate> candidates,
                        std::span<const double> pair_values, MaskMode mode);

// Keeps candidates whose pair carries at least one gold relation.
PredictionSet TrueNaMask(std::span<const Candidate> candidates,
                         const corpus::Corpus& corpus);

// Mean of the existence logits; NaN for unscored pairs.
std::vector<double> MeanExistenceLogits(std::span<const scoring::PairScores> scores);

// DocRED result format: [{title, h_idx, t_idx, r, doc_index}].
nlohmann::json PredictionsToJson(const PredictionSet& set,
                                 const corpus::Corpus& corpus);
// [{doc_index, h_idx, t_idx, r, confidence}]
nlohmann::json ConfidencesToJson(const PredictionSet& set);

// Reads the result format. doc_index wins when present; otherwise the
// title must name exactly one document. Confidences are zero.
std::vector<Triple> PredictionsFromJson(const nlohmann::json& j,
                                        const corpus::Corpus& corpus);

}  // namespace wsre::predict

#endif  // WSRE_PREDICT_H_
