#include "wsre/scoring.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include "wsre/error.h"
#include "wsre/llm/prompts.h"

namespace wsre::scoring {
namespace {

void AddFlag(std::vector<std::string>* flags, const std::string& flag) {
  if (flags && std::find(flags->begin(), flags->end(), flag) == flags->end()) {
    flags->push_back(flag);
  }
}

}  // namespace

std::vector<std::optional<double>> ScoreRelationSpecific(
    const PairPrompt& pair, const corpus::RelationSchema& schema,
    llm::Gateway& gateway, std::vector<std::string>* flags) {
  if (schema.empty()) {
    throw ValidationError("relation-specific scoring needs at least one relation");
  }
  std::vector<std::optional<double>> out;
  out.reserve(schema.size());
  for (const auto& rel : schema.relations()) {
    const std::string prompt = llm::ScoringPrompt(rel.question_template,
                                                  pair.head, pair.tail, pair.context);
    try {
      const llm::YesNoScore s = gateway.ScoreYesNo(prompt);
      if (s.degraded) AddFlag(flags, "sr_text_fallback");
      out.emplace_back(s.value);
    } catch (const TransportError&) {
      AddFlag(flags, "sr_missing");
      out.emplace_back(std::nullopt);
    }
  }
  return out;
}

std::vector<double> ScoreOpenEnded(const PairPrompt& pair, llm::Gateway& gateway) {
  return gateway
      .GenerateWithEmbedding(llm::OpenEndedPrompt(pair.head, pair.tail, pair.context))
      .embedding;
}

Eigen::MatrixXd EmbedRelations(const corpus::RelationSchema& schema,
                               llm::Gateway& gateway) {
  Eigen::MatrixXd rels(static_cast<Eigen::Index>(schema.size()), gateway.n_hidden());
  for (std::size_t r = 0; r < schema.size(); ++r) {
    const std::vector<double> v = gateway.EmbedText(schema[r].name);
    rels.row(static_cast<Eigen::Index>(r)) =
        Eigen::Map<const Eigen::RowVectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  }
  return rels;
}

Similarities RelationSimilarities(std::span<const double> embedding,
                                  const Eigen::MatrixXd& relation_embeddings) {
  if (static_cast<Eigen::Index>(embedding.size()) != relation_embeddings.cols()) {
    throw ValidationError("embedding width " + std::to_string(embedding.size()) +
                          " does not match relation embeddings width " +
                          std::to_string(relation_embeddings.cols()));
  }
  const Eigen::Map<const Eigen::VectorXd> e(embedding.data(),
                                            static_cast<Eigen::Index>(embedding.size()));
  const Eigen::VectorXd row_norms = relation_embeddings.rowwise().norm();
  for (Eigen::Index r = 0; r < row_norms.size(); ++r) {
    if (row_norms[r] == 0.0) {
      throw ValidationError("relation embedding row " + std::to_string(r) +
                            " has zero norm");
    }
  }
  Similarities out;
  out.cos_sims.assign(static_cast<std::size_t>(relation_embeddings.rows()), 0.0);
  const double e_norm = e.norm();
  if (e_norm == 0.0) {
    out.degenerate = true;
    return out;
  }
  const Eigen::VectorXd dots = relation_embeddings * e;
  for (Eigen::Index r = 0; r < dots.size(); ++r) {
    out.cos_sims[static_cast<std::size_t>(r)] =
        std::clamp(dots[r] / (e_norm * row_norms[r]), -1.0, 1.0);
  }
  return out;
}

std::vector<double> ScoreRelationExistence(const PairPrompt& pair,
                                           std::span<const std::string> paraphrases,
                                           llm::Gateway& gateway,
                                           std::vector<std::string>* flags) {
  if (paraphrases.empty()) {
    throw ValidationError("relation-existence scoring needs at least one paraphrase");
  }
  std::vector<double> out;
  out.reserve(paraphrases.size());
  for (const auto& tmpl : paraphrases) {
    const std::string prompt =
        llm::ScoringPrompt(tmpl, pair.head, pair.tail, pair.context);
    try {
      const llm::YesNoScore s = gateway.ScoreYesNo(prompt);
      if (s.degraded) AddFlag(flags, "re_text_fallback");
      out.push_back(s.value);
    } catch (const TransportError&) {
      AddFlag(flags, "re_missing");
      out.push_back(std::numeric_limits<double>::quiet_NaN());
    }
  }
  return out;
}

RelationDistribution NormalizeScores(std::span<const double> raw) {
  if (raw.empty()) throw ValidationError("cannot normalize an empty score vector");
  for (double v : raw) {
    if (!std::isfinite(v)) throw ValidationError("non-finite score");
  }
  const double max = *std::max_element(raw.begin(), raw.end());
  RelationDistribution d;
  d.probs.resize(raw.size());
  double total = 0.0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    d.probs[i] = std::exp(raw[i] - max);
    total += d.probs[i];
  }
  for (double& p : d.probs) p /= total;
  return d;
}

void ParallelFor(std::size_t n, int workers,
                 const std::function<void(std::size_t)>& fn) {
  const auto nthreads =
      static_cast<std::size_t>(std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(n, 1)));
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mu;
  std::atomic<bool> failed{false};

  auto work = [&] {
    for (;;) {
      if (failed.load()) return;
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mu);
        if (!first_error) first_error = std::current_exception();
        failed.store(true);
        return;
      }
    }
  };

  if (nthreads == 1) {
    work();
  } else {
    std::vector<std::jthread> threads;
    threads.reserve(nthreads);
    for (std::size_t t = 0; t < nthreads; ++t) threads.emplace_back(work);
  }
  if (first_error) std::rethrow_exception(first_error);
}

std::vector<PairScores> ScoreCorpus(const corpus::Corpus& corpus,
                                    const corpus::RelationSchema& schema,
                                    const Eigen::MatrixXd& relation_embeddings,
                                    const ContextFn& context,
                                    llm::Gateway& gateway,
                                    const ScoreOptions& options) {
  if (schema.empty()) throw ValidationError("schema has no positive relations");
  const std::vector<corpus::EntityPair> pairs = corpus::EnumerateCorpusPairs(corpus);
  const std::vector<std::string>& paraphrases =
      options.paraphrases.empty() ? llm::DefaultExistenceParaphrases()
                                  : options.paraphrases;

  std::vector<PairScores> out(pairs.size());
  ParallelFor(pairs.size(), options.workers, [&](std::size_t i) {
    const corpus::EntityPair& pair = pairs[i];
    const corpus::Document& doc = corpus.documents[pair.doc_index];
    PairPrompt prompt{doc.entities[pair.head].Name(), doc.entities[pair.tail].Name(),
                      context(pair)};
    PairScores s;
    s.pair = pair;

    if (options.relation_specific) {
      s.sr_logits = ScoreRelationSpecific(prompt, schema, gateway, &s.flags);
      const bool complete = std::all_of(s.sr_logits.begin(), s.sr_logits.end(),
                                        [](const auto& v) { return v.has_value(); });
      if (complete) {
        double sum = 0.0;
        for (const auto& v : s.sr_logits) sum += *v;
        s.mean_sr = sum / static_cast<double>(s.sr_logits.size());
      }
    }

    try {
      s.oe_embedding = ScoreOpenEnded(prompt, gateway);
      Similarities sims = RelationSimilarities(s.oe_embedding, relation_embeddings);
      if (sims.degenerate) s.flags.push_back("degenerate_embedding");
      s.cos_sims = std::move(sims.cos_sims);
      double sum = 0.0;
      for (double c : s.cos_sims) sum += c;
      s.mean_cos = sum / static_cast<double>(s.cos_sims.size());
    } catch (const TransportError&) {
      s.flags.push_back("oe_missing");
      s.scored = false;
    }

    s.re_logits = ScoreRelationExistence(prompt, paraphrases, gateway, &s.flags);
    for (double v : s.re_logits) {
      if (std::isnan(v)) s.scored = false;
    }
    out[i] = std::move(s);
  });
  return out;
}

}  // namespace wsre::scoring
