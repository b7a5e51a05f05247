#include "wsre/prior.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "wsre/error.h"
#include "wsre/util/random.h"

namespace wsre::prior {

TypeRelationPrior::TypeRelationPrior(std::size_t n_relations, double smoothing,
                                     double lambda)
    : uniform_(n_relations, n_relations ? 1.0 / static_cast<double>(n_relations) : 0.0),
      smoothing_(smoothing),
      lambda_(lambda) {}

std::span<const double> TypeRelationPrior::Row(const std::string& head_type,
                                               const std::string& tail_type) const {
  auto it = rows_.find({head_type, tail_type});
  if (it == rows_.end()) return uniform_;
  return it->second;
}

void TypeRelationPrior::SetRow(const TypePair& types, std::vector<double> probs) {
  if (probs.size() != uniform_.size()) {
    throw ValidationError("prior row has " + std::to_string(probs.size()) +
                          " entries, expected " + std::to_string(uniform_.size()));
  }
  double total = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw ValidationError("prior entries must be finite and non-negative");
    }
    total += p;
  }
  if (total <= 0.0) throw ValidationError("prior row sums to zero");
  // Rows already normalized are kept as given so serialization round-trips.
  if (std::abs(total - 1.0) > 1e-12) {
    for (double& p : probs) p /= total;
  }
  rows_[types] = std::move(probs);
}

TypeRelationPrior EstimatePrior(const corpus::Corpus& corpus,
                                const corpus::RelationSchema& schema,
                                const PriorOptions& options) {
  if (!(options.fraction > 0.0 && options.fraction <= 1.0)) {
    throw ValidationError("prior fraction must lie in (0, 1]");
  }
  if (options.smoothing < 0.0) throw ValidationError("smoothing must be >= 0");
  if (!(options.lambda >= 0.0 && options.lambda <= 1.0)) {
    throw ValidationError("prior lambda must lie in [0, 1]");
  }
  const std::size_t n_docs = corpus.documents.size();
  if (n_docs == 0) throw ValidationError("cannot estimate a prior from an empty corpus");
  if (corpus.gold.empty()) {
    throw ValidationError("cannot estimate a prior: corpus has no gold labels");
  }

  // Partial Fisher-Yates over document indices.
  const auto n_sample = std::min<std::size_t>(
      n_docs, static_cast<std::size_t>(std::ceil(options.fraction * static_cast<double>(n_docs) - 1e-9)));
  if (n_sample == 0) throw ValidationError("prior sample is empty");
  std::vector<std::size_t> order(n_docs);
  std::iota(order.begin(), order.end(), 0);
  if (n_sample < n_docs) {
    Rng rng(options.seed);
    for (std::size_t i = 0; i < n_sample; ++i) {
      const std::size_t j = i + rng.Below(n_docs - i);
      std::swap(order[i], order[j]);
    }
  }
  std::vector<std::size_t> sampled(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_sample));
  std::sort(sampled.begin(), sampled.end());
  std::vector<bool> in_sample(n_docs, false);
  for (std::size_t d : sampled) in_sample[d] = true;

  for (std::size_t d : sampled) {
    for (const auto& e : corpus.documents[d].entities) {
      if (!schema.HasEntityType(e.type)) {
        throw ValidationError("unknown entity type '" + e.type + "' in document " +
                              std::to_string(d));
      }
    }
  }

  const std::size_t n_rels = schema.size();
  std::map<TypeRelationPrior::TypePair, std::vector<double>> counts;
  std::set<std::tuple<std::size_t, int, int>> positive_pairs;
  for (const auto& g : corpus.gold) {
    if (!in_sample[g.doc_index]) continue;
    const auto r = schema.IndexOf(g.relation_id);
    if (!r) {
      throw ValidationError("gold relation '" + g.relation_id +
                            "' is not in the schema");
    }
    const auto& doc = corpus.documents[g.doc_index];
    auto& row = counts[{doc.entities[g.head].type, doc.entities[g.tail].type}];
    if (row.empty()) row.assign(n_rels, 0.0);
    row[*r] += 1.0;
    positive_pairs.emplace(g.doc_index, g.head, g.tail);
  }

  TypeRelationPrior prior(n_rels, options.smoothing, options.lambda);
  for (auto& [types, row] : counts) {
    const double total = std::accumulate(row.begin(), row.end(), 0.0);
    const double denom = total + options.smoothing * static_cast<double>(n_rels);
    std::vector<double> probs(n_rels);
    for (std::size_t r = 0; r < n_rels; ++r) {
      probs[r] = (row[r] + options.smoothing) / denom;
    }
    prior.SetRow(types, std::move(probs));
  }

  std::size_t n_pairs = 0;
  for (std::size_t d : sampled) {
    const std::size_t n = corpus.documents[d].entities.size();
    n_pairs += n * (n > 0 ? n - 1 : 0);
  }
  prior.set_class_balance(n_pairs ? static_cast<double>(positive_pairs.size()) /
                                        static_cast<double>(n_pairs)
                                  : 0.0);
  prior.set_sampled_documents(std::move(sampled));
  return prior;
}

std::vector<double> ApplyPrior(std::span<const double> dist,
                               std::span<const double> prior_row, double lambda) {
  if (dist.size() != prior_row.size()) {
    throw ValidationError("distribution has " + std::to_string(dist.size()) +
                          " entries but the prior row has " +
                          std::to_string(prior_row.size()));
  }
  std::vector<double> fused(dist.size());
  for (std::size_t i = 0; i < dist.size(); ++i) {
    fused[i] = (1.0 - lambda) * dist[i] + lambda * prior_row[i];
  }
  return fused;
}

nlohmann::json PriorToJson(const TypeRelationPrior& prior) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& [types, probs] : prior.rows()) {
    rows.push_back({{"head_type", types.first},
                    {"tail_type", types.second},
                    {"probs", probs}});
  }
  return {{"smoothing", prior.smoothing()},
          {"lambda", prior.lambda()},
          {"class_balance", prior.class_balance()},
          {"n_relations", prior.n_relations()},
          {"sampled_documents", prior.sampled_documents()},
          {"rows", std::move(rows)}};
}

TypeRelationPrior PriorFromJson(const nlohmann::json& j) {
  try {
    const auto& rows = j.at("rows");
    std::size_t n_rels = j.value("n_relations", std::size_t{0});
    if (n_rels == 0 && !rows.empty()) n_rels = rows.at(0).at("probs").size();
    TypeRelationPrior prior(n_rels, j.value("smoothing", 0.0), j.value("lambda", 0.5));
    for (const auto& row : rows) {
      prior.SetRow({row.at("head_type").get<std::string>(),
                    row.at("tail_type").get<std::string>()},
                   row.at("probs").get<std::vector<double>>());
    }
    prior.set_class_balance(j.value("class_balance", 0.0));
    if (j.contains("sampled_documents")) {
      prior.set_sampled_documents(j["sampled_documents"].get<std::vector<std::size_t>>());
    }
    return prior;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed prior: ") + e.what());
  }
}

double TotalVariation(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw ValidationError("distribution sizes differ");
  double tv = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) tv += std::abs(p[i] - q[i]);
  return 0.5 * tv;
}

}  // namespace wsre::prior
