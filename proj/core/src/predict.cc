#include "wsre/predict.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <tuple>

#include "wsre/error.h"
#include "wsre/util/stats.h"

namespace wsre::predict {
namespace {

constexpr std::pair<MaskMode, std::string_view> kModeNames[] = {
    {MaskMode::kSimpleRe, "simple_re"},
    {MaskMode::kMajorityVote, "mv"},
    {MaskMode::kDataProgramming, "dp"},
    {MaskMode::kDpSmoothed, "dp_smoothed"},
    {MaskMode::kTrueNa, "true_na"},
};

Triple ToTriple(const Candidate& c) {
  return {c.pair.doc_index, c.pair.head, c.pair.tail, c.relation_id, c.confidence};
}

// Copies candidates passing `keep`, dropping repeated (doc, h, t, r).
template <typename Keep>
PredictionSet Filter(std::span<const Candidate> candidates, MaskMode mode, Keep keep) {
  PredictionSet out;
  out.mode = mode;
  std::set<std::tuple<std::size_t, int, int, std::string>> seen;
  for (const Candidate& c : candidates) {
    if (!keep(c)) continue;
    if (!seen.emplace(c.pair.doc_index, c.pair.head, c.pair.tail, c.relation_id).second) continue;
    out.triples.push_back(ToTriple(c));
  }
  return out;
}

void CheckIndex(const Candidate& c, std::size_t n) {
  if (c.pair_index >= n) {
    throw ValidationError("candidate refers to pair " + std::to_string(c.pair_index) +
                          " but only " + std::to_string(n) + " pair values were given");
  }
}

}  // namespace

std::string_view MaskModeName(MaskMode m) {
  for (const auto& [mode, name] : kModeNames) {
    if (mode == m) return name;
  }
  return "unknown";
}

std::optional<MaskMode> ParseMaskMode(std::string_view name) {
  for (const auto& [mode, n] : kModeNames) {
    if (n == name) return mode;
  }
  return std::nullopt;
}

std::vector<std::vector<double>> FuseDistributions(
    std::span<const scoring::PairScores> scores,
    const prior::TypeRelationPrior* prior, bool use_sr_logits) {
  std::vector<std::vector<double>> out(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const auto& s = scores[i];
    std::vector<double> raw;
    if (use_sr_logits) {
      if (!s.mean_sr) continue;
      for (const auto& v : s.sr_logits) raw.push_back(*v);
    } else {
      if (!s.scored || s.cos_sims.empty()) continue;
      raw = s.cos_sims;
    }
    std::vector<double> dist = scoring::NormalizeScores(raw).probs;
    if (prior) {
      dist = prior::ApplyPrior(dist, prior->Row(s.pair.head_type, s.pair.tail_type),
                               prior->lambda());
    }
    out[i] = std::move(dist);
  }
  return out;
}

std::vector<Candidate> SelectTopPercentile(
    std::span<const corpus::EntityPair> pairs,
    std::span<const std::vector<double>> distributions,
    const corpus::RelationSchema& schema, double p, Pooling pooling) {
  if (!(p > 0.0 && p <= 100.0)) throw ValidationError("percentile p must lie in (0, 100]");
  if (pairs.size() != distributions.size()) {
    throw ValidationError("pair and distribution counts differ");
  }
  for (const auto& d : distributions) {
    if (!d.empty() && d.size() != schema.size()) {
      throw ValidationError("distribution has " + std::to_string(d.size()) +
                            " entries but the schema has " + std::to_string(schema.size()) +
                            " relations");
    }
  }

  double global_cut = 0.0;
  if (pooling == Pooling::kGlobal) {
    std::vector<double> pool;
    for (const auto& d : distributions) pool.insert(pool.end(), d.begin(), d.end());
    if (pool.empty()) return {};
    global_cut = Percentile(pool, 100.0 - p);
  }

  std::vector<Candidate> out;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& d = distributions[i];
    if (d.empty()) continue;
    const double cut = pooling == Pooling::kGlobal ? global_cut : Percentile(d, 100.0 - p);
    for (std::size_t r = 0; r < d.size(); ++r) {
      if (d[r] >= cut) out.push_back({pairs[i], i, r, schema[r].id, d[r]});
    }
  }
  return out;
}

PredictionSet SimpleReMask(std::span<const Candidate> candidates,
                           std::span<const double> pair_logits, double threshold) {
  std::set<std::size_t> missing;
  PredictionSet out = Filter(candidates, MaskMode::kSimpleRe, [&](const Candidate& c) {
    CheckIndex(c, pair_logits.size());
    const double v = pair_logits[c.pair_index];
    if (std::isnan(v)) {
      missing.insert(c.pair_index);
      return false;
    }
    return v >= threshold;
  });
  if (!missing.empty()) {
    out.warnings.push_back(std::to_string(missing.size()) +
                           " pair(s) without an existence logit; their candidates were dropped");
  }
  return out;
}

PredictionSet ModelMask(std::span<const Candidate> candidates,
                        std::span<const double> pair_values, MaskMode mode) {
  if (mode != MaskMode::kMajorityVote && mode != MaskMode::kDataProgramming &&
      mode != MaskMode::kDpSmoothed) {
    throw ValidationError("model mask needs mode mv, dp or dp_smoothed");
  }
  const double cut = mode == MaskMode::kMajorityVote ? 0.0 : 0.5;
  std::set<std::size_t> missing;
  PredictionSet out = Filter(candidates, mode, [&](const Candidate& c) {
    CheckIndex(c, pair_values.size());
    const double v = pair_values[c.pair_index];
    if (std::isnan(v)) {
      missing.insert(c.pair_index);
      return false;
    }
    return v > cut;
  });
  if (!missing.empty()) {
    out.warnings.push_back(std::to_string(missing.size()) +
                           " pair(s) without a label-model output; their candidates were dropped");
  }
  return out;
}

PredictionSet TrueNaMask(std::span<const Candidate> candidates, const corpus::Corpus& corpus) {
  std::set<std::tuple<std::size_t, int, int>> positive;
  for (const auto& g : corpus.gold) positive.emplace(g.doc_index, g.head, g.tail);
  return Filter(candidates, MaskMode::kTrueNa, [&](const Candidate& c) {
    return positive.count({c.pair.doc_index, c.pair.head, c.pair.tail}) > 0;
  });
}

std::vector<double> MeanExistenceLogits(std::span<const scoring::PairScores> scores) {
  std::vector<double> out(scores.size(), std::nan(""));
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const auto& re = scores[i].re_logits;
    if (!scores[i].scored || re.empty()) continue;
    bool finite = true;
    for (double v : re) finite = finite && std::isfinite(v);
    if (finite) out[i] = Mean(re);
  }
  return out;
}

nlohmann::json PredictionsToJson(const PredictionSet& set, const corpus::Corpus& corpus) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& t : set.triples) {
    if (t.doc_index >= corpus.documents.size()) {
      throw ValidationError("prediction refers to unknown document " + std::to_string(t.doc_index));
    }
    out.push_back({{"title", corpus.documents[t.doc_index].title},
                   {"h_idx", t.head},
                   {"t_idx", t.tail},
                   {"r", t.relation_id},
                   {"doc_index", t.doc_index}});
  }
  return out;
}

nlohmann::json ConfidencesToJson(const PredictionSet& set) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& t : set.triples) {
    out.push_back({{"doc_index", t.doc_index},
                   {"h_idx", t.head},
                   {"t_idx", t.tail},
                   {"r", t.relation_id},
                   {"confidence", t.confidence}});
  }
  return out;
}

std::vector<Triple> PredictionsFromJson(const nlohmann::json& j, const corpus::Corpus& corpus) {
  if (!j.is_array()) throw ParseError("predictions must be a JSON array");
  std::map<std::string, std::vector<std::size_t>> by_title;
  for (const auto& d : corpus.documents) by_title[d.title].push_back(d.index);

  std::vector<Triple> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& p = j[i];
    try {
      Triple t;
      if (p.contains("doc_index")) {
        t.doc_index = p.at("doc_index").get<std::size_t>();
      } else {
        const auto title = p.at("title").get<std::string>();
        auto it = by_title.find(title);
        if (it == by_title.end()) {
          throw ValidationError("prediction " + std::to_string(i) + " names unknown document '" +
                                title + "'");
        }
        if (it->second.size() > 1) {
          throw ValidationError("prediction " + std::to_string(i) + " title '" + title +
                                "' is ambiguous; add doc_index");
        }
        t.doc_index = it->second.front();
      }
      t.head = p.at("h_idx").get<int>();
      t.tail = p.at("t_idx").get<int>();
      t.relation_id = p.at("r").get<std::string>();
      out.push_back(std::move(t));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("malformed prediction " + std::to_string(i) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace wsre::predict
