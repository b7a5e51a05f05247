#ifndef WSRE_PRIOR_H_
#define WSRE_PRIOR_H_

// Type-conditioned relation prior P(r | head type, tail type), estimated
// from a labeled fraction of documents and mixed into predicted relation
// distributions.

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "wsre/corpus.h"

namespace wsre::prior {

struct PriorOptions {
  double fraction = 1.0;   // (0, 1]
  double smoothing = 0.0;  // additive count smoothing, >= 0
  double lambda = 0.5;     // mixture weight of the prior, [0, 1]
  std::uint64_t seed = 0;
};

class TypeRelationPrior {
 public:
  using TypePair = std::pair<std::string, std::string>;

  TypeRelationPrior() = default;
  TypeRelationPrior(std::size_t n_relations, double smoothing, double lambda);

  // Stored row, or the uniform fallback for unseen type pairs.
  std::span<const double> Row(const std::string& head_type,
                              const std::string& tail_type) const;

  // Normalizes and stores a row; entries must be >= 0 with a positive sum.
  void SetRow(const TypePair& types, std::vector<double> probs);

  const std::map<TypePair, std::vector<double>>& rows() const { return rows_; }
  std::size_t n_relations() const { return uniform_.size(); }
  double smoothing() const { return smoothing_; }
  double lambda() const { return lambda_; }

  // Fraction of ordered entity pairs in the sampled documents that carry at
  // least one gold relation. Feeds the label model's class balance.
  double class_balance() const { return class_balance_; }
  void set_class_balance(double b) { class_balance_ = b; }

  // Document indices the estimate was drawn from, ascending.
  const std::vector<std::size_t>& sampled_documents() const { return sampled_; }
  void set_sampled_documents(std::vector<std::size_t> docs) { sampled_ = std::move(docs); }

 private:
  std::map<TypePair, std::vector<double>> rows_;
  std::vector<double> uniform_;
  double smoothing_ = 0.0;
  double lambda_ = 0.5;
  double class_balance_ = 0.0;
  std::vector<std::size_t> sampled_;
};

// Samples ceil(fraction * n_docs) documents without replacement (seeded;
// fraction 1 takes every document) and counts gold relations per
// (head type, tail type):
//   prior[r] = (count(r) + s) / (total + s * n_relations).
// Throws ValidationError for an empty corpus, a corpus without gold labels,
// fraction outside (0, 1], or an entity type missing from the schema's type
// vocabulary (the message names the tag).
TypeRelationPrior EstimatePrior(const corpus::Corpus& corpus,
                                const corpus::RelationSchema& schema,
                                const PriorOptions& options);

// (1 - lambda) * dist + lambda * prior_row. With lambda = 0.5 this is the
// additive combination renormalized. Throws ValidationError on length
// mismatch.
std::vector<double> ApplyPrior(std::span<const double> dist,
                               std::span<const double> prior_row,
                               double lambda = 0.5);

// {smoothing, lambda, class_balance, n_relations, sampled_documents,
//  rows: [{head_type, tail_type, probs}]}
nlohmann::json PriorToJson(const TypeRelationPrior& prior);
TypeRelationPrior PriorFromJson(const nlohmann::json& j);

// Total-variation distance between two distributions.
double TotalVariation(std::span<const double> p, std::span<const double> q);

}  // namespace wsre::prior

#endif  // WSRE_PRIOR_H_
