#include "wsre/pipeline/config.h"

#include <set>

#include "wsre/corpus.h"
#include "wsre/error.h"
#include "wsre/util/hash.h"

namespace wsre::pipeline {
namespace {

using nlohmann::json;

void CheckKeys(const json& j, const std::string& where, std::set<std::string> known) {
  if (!j.is_object()) throw ValidationError("config " + where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) {
      throw ValidationError("unknown config key '" + (where.empty() ? "" : where + ".") + key + "'");
    }
  }
}

template <typename T>
void Read(const json& j, const char* key, T& out) {
  if (!j.contains(key) || j[key].is_null()) return;
  try {
    out = j[key].get<T>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config key '") + key + "': " + e.what());
  }
}

void ReadPath(const json& j, const char* key, std::filesystem::path& out) {
  std::string s;
  Read(j, key, s);
  if (!s.empty()) out = s;
}

void ReadOptionalPath(const json& j, const char* key,
                      std::optional<std::filesystem::path>& out) {
  if (!j.contains(key)) return;
  if (j[key].is_null()) {
    out.reset();
    return;
  }
  std::string s;
  Read(j, key, s);
  if (s.empty()) {
    out.reset();
  } else {
    out = s;
  }
}

void ReadThresholds(const json& j, const char* key, labelmodel::SourceThresholds& th) {
  if (!j.contains(key)) return;
  const auto& t = j[key];
  CheckKeys(t, std::string("thresholds.") + key, {"hi", "lo"});
  Read(t, "hi", th.hi);
  Read(t, "lo", th.lo);
}

json ThresholdsToJson(const labelmodel::SourceThresholds& th) {
  return {{"hi", th.hi}, {"lo", th.lo}};
}

json OptionalPath(const std::optional<std::filesystem::path>& p) {
  return p ? json(p->string()) : json(nullptr);
}

}  // namespace

RunConfig ConfigFromJson(const json& j, RunConfig c) {
  CheckKeys(j, "", {"corpus", "schema", "output_dir", "ignore_set", "backend", "summarize",
                    "relation_specific", "include_sr", "sr_distribution", "paraphrases",
                    "prior", "percentile", "pooling", "thresholds", "re_threshold", "mode",
                    "label_model", "logistic", "synth", "workers", "embedding_sidecar"});
  ReadPath(j, "corpus", c.corpus);
  ReadPath(j, "schema", c.schema);
  ReadPath(j, "output_dir", c.output_dir);
  ReadOptionalPath(j, "ignore_set", c.ignore_set);

  if (j.contains("backend")) {
    const auto& b = j["backend"];
    CheckKeys(b, "backend", {"kind", "endpoint", "model", "n_hidden", "max_in_flight",
                             "timeout_ms", "max_retries", "backoff_ms", "seed", "temperature",
                             "api_key_env", "recorded_kind", "cache", "text_fallback"});
    if (b.contains("kind")) {
      std::string kind;
      Read(b, "kind", kind);
      const auto parsed = llm::ParseBackendKind(kind);
      if (!parsed) throw ValidationError("unknown backend kind '" + kind + "'");
      c.backend.kind = *parsed;
    }
    Read(b, "endpoint", c.backend.endpoint);
    Read(b, "model", c.backend.model);
    Read(b, "n_hidden", c.backend.n_hidden);
    Read(b, "max_in_flight", c.backend.max_in_flight);
    if (b.contains("timeout_ms")) {
      c.backend.timeout = std::chrono::milliseconds(b["timeout_ms"].get<std::int64_t>());
    }
    Read(b, "max_retries", c.backend.retry.max_retries);
    if (b.contains("backoff_ms")) {
      c.backend.retry.backoff = std::chrono::milliseconds(b["backoff_ms"].get<std::int64_t>());
    }
    Read(b, "seed", c.backend.seed);
    if (b.contains("temperature")) {
      if (b["temperature"].is_null()) {
        c.backend.temperature.reset();
      } else {
        c.backend.temperature = b["temperature"].get<double>();
      }
    }
    Read(b, "api_key_env", c.backend.api_key_env);
    Read(b, "recorded_kind", c.backend.recorded_kind);
    ReadOptionalPath(b, "cache", c.backend.cache_path);
    Read(b, "text_fallback", c.text_fallback);
  }

  Read(j, "summarize", c.summarize);
  Read(j, "relation_specific", c.relation_specific);
  Read(j, "include_sr", c.include_sr);
  Read(j, "sr_distribution", c.sr_distribution);
  Read(j, "paraphrases", c.paraphrases);

  if (j.contains("prior")) {
    const auto& p = j["prior"];
    CheckKeys(p, "prior", {"enabled", "fraction", "lambda", "smoothing", "seed"});
    Read(p, "enabled", c.prior.enabled);
    Read(p, "fraction", c.prior.fraction);
    Read(p, "lambda", c.prior.lambda);
    Read(p, "smoothing", c.prior.smoothing);
    Read(p, "seed", c.prior.seed);
  }
  Read(j, "percentile", c.percentile);
  if (j.contains("pooling")) {
    std::string pooling;
    Read(j, "pooling", pooling);
    if (pooling == "global") {
      c.pooling = predict::Pooling::kGlobal;
    } else if (pooling == "per_pair") {
      c.pooling = predict::Pooling::kPerPair;
    } else {
      throw ValidationError("pooling must be 'global' or 'per_pair'");
    }
  }
  if (j.contains("thresholds")) {
    const auto& t = j["thresholds"];
    CheckKeys(t, "thresholds", {"re", "cos", "sr"});
    ReadThresholds(t, "re", c.thresholds.re);
    ReadThresholds(t, "cos", c.thresholds.cos);
    ReadThresholds(t, "sr", c.thresholds.sr);
  }
  Read(j, "re_threshold", c.re_threshold);
  if (j.contains("mode")) {
    std::string mode;
    Read(j, "mode", mode);
    const auto parsed = predict::ParseMaskMode(mode);
    if (!parsed) throw ValidationError("unknown mask mode '" + mode + "'");
    c.mode = *parsed;
  }
  if (j.contains("label_model")) {
    const auto& lm = j["label_model"];
    CheckKeys(lm, "label_model", {"basis", "clip_eps", "max_iterations"});
    if (lm.contains("basis")) {
      std::string basis;
      Read(lm, "basis", basis);
      if (basis == "signed") {
        c.label_model.basis = labelmodel::MomentBasis::kSigned;
      } else if (basis == "indicator") {
        c.label_model.basis = labelmodel::MomentBasis::kIndicator;
      } else {
        throw ValidationError("label_model.basis must be 'signed' or 'indicator'");
      }
    }
    Read(lm, "clip_eps", c.label_model.clip_eps);
    Read(lm, "max_iterations", c.label_model.max_iterations);
  }
  if (j.contains("logistic")) {
    const auto& lr = j["logistic"];
    CheckKeys(lr, "logistic", {"learning_rate", "l2", "epochs", "seed"});
    Read(lr, "learning_rate", c.logistic.learning_rate);
    Read(lr, "l2", c.logistic.l2);
    Read(lr, "epochs", c.logistic.epochs);
    Read(lr, "seed", c.logistic.seed);
  }
  if (j.contains("synth")) {
    const auto& s = j["synth"];
    CheckKeys(s, "synth", {"accuracies", "propensities", "class_balance", "n", "seed", "tolerance"});
    Read(s, "accuracies", c.synth.accuracies);
    Read(s, "propensities", c.synth.propensities);
    Read(s, "class_balance", c.synth.class_balance);
    Read(s, "n", c.synth.n);
    Read(s, "seed", c.synth.seed);
    Read(s, "tolerance", c.synth.tolerance);
  }
  Read(j, "workers", c.workers);
  Read(j, "embedding_sidecar", c.embedding_sidecar);
  return c;
}

json ConfigToJson(const RunConfig& c) {
  const auto& b = c.backend;
  return {
      {"corpus", c.corpus.string()},
      {"schema", c.schema.string()},
      {"output_dir", c.output_dir.string()},
      {"ignore_set", OptionalPath(c.ignore_set)},
      {"backend",
       {{"kind", std::string(llm::BackendKindName(b.kind))},
        {"endpoint", b.endpoint},
        {"model", b.model},
        {"n_hidden", b.n_hidden},
        {"max_in_flight", b.max_in_flight},
        {"timeout_ms", b.timeout.count()},
        {"max_retries", b.retry.max_retries},
        {"backoff_ms", b.retry.backoff.count()},
        {"seed", b.seed},
        {"temperature", b.temperature ? json(*b.temperature) : json(nullptr)},
        {"api_key_env", b.api_key_env},
        {"recorded_kind", b.recorded_kind},
        {"cache", OptionalPath(b.cache_path)},
        {"text_fallback", c.text_fallback}}},
      {"summarize", c.summarize},
      {"relation_specific", c.relation_specific},
      {"include_sr", c.include_sr},
      {"sr_distribution", c.sr_distribution},
      {"paraphrases", c.paraphrases},
      {"prior",
       {{"enabled", c.prior.enabled},
        {"fraction", c.prior.fraction},
        {"lambda", c.prior.lambda},
        {"smoothing", c.prior.smoothing},
        {"seed", c.prior.seed}}},
      {"percentile", c.percentile},
      {"pooling", c.pooling == predict::Pooling::kGlobal ? "global" : "per_pair"},
      {"thresholds",
       {{"re", ThresholdsToJson(c.thresholds.re)},
        {"cos", ThresholdsToJson(c.thresholds.cos)},
        {"sr", ThresholdsToJson(c.thresholds.sr)}}},
      {"re_threshold", c.re_threshold},
      {"mode", std::string(predict::MaskModeName(c.mode))},
      {"label_model",
       {{"basis", c.label_model.basis == labelmodel::MomentBasis::kSigned ? "signed" : "indicator"},
        {"clip_eps", c.label_model.clip_eps},
        {"max_iterations", c.label_model.max_iterations}}},
      {"logistic",
       {{"learning_rate", c.logistic.learning_rate},
        {"l2", c.logistic.l2},
        {"epochs", c.logistic.epochs},
        {"seed", c.logistic.seed}}},
      {"synth",
       {{"accuracies", c.synth.accuracies},
        {"propensities", c.synth.propensities},
        {"class_balance", c.synth.class_balance},
        {"n", c.synth.n},
        {"seed", c.synth.seed},
        {"tolerance", c.synth.tolerance}}},
      {"workers", c.workers},
      {"embedding_sidecar", c.embedding_sidecar},
  };
}

RunConfig LoadConfig(const std::filesystem::path& path) {
  const std::string text = corpus::ReadFile(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("cannot parse config " + path.string() + ": " + e.what());
  }
  return ConfigFromJson(j);
}

std::string ConfigHash(const RunConfig& config) {
  json j = ConfigToJson(config);
  j.erase("output_dir");
  j["backend"].erase("cache");
  return HexDigest(Fnv1a64(j.dump()));
}

void ValidateRunConfig(const RunConfig& c) {
  llm::ValidateConfig(c.backend);
  if (!(c.percentile > 0.0 && c.percentile <= 100.0)) {
    throw ValidationError("percentile must lie in (0, 100]");
  }
  if (!(c.prior.fraction > 0.0 && c.prior.fraction <= 1.0)) {
    throw ValidationError("prior.fraction must lie in (0, 1]");
  }
  if (!(c.prior.lambda >= 0.0 && c.prior.lambda <= 1.0)) {
    throw ValidationError("prior.lambda must lie in [0, 1]");
  }
  if (c.prior.smoothing < 0.0) throw ValidationError("prior.smoothing must be >= 0");
  for (const auto* th : {&c.thresholds.re, &c.thresholds.cos, &c.thresholds.sr}) {
    if (!(th->lo >= 0.0 && th->lo <= th->hi && th->hi <= 100.0)) {
      throw ValidationError("vote thresholds need 0 <= lo <= hi <= 100");
    }
  }
  if (c.include_sr && !c.relation_specific) {
    throw ValidationError("include_sr needs relation_specific scoring");
  }
  if (c.sr_distribution && !c.relation_specific) {
    throw ValidationError("sr_distribution needs relation_specific scoring");
  }
  if (c.workers <= 0) throw ValidationError("workers must be positive");
  if (!(c.label_model.clip_eps > 0.0 && c.label_model.clip_eps < 0.5)) {
    throw ValidationError("label_model.clip_eps must lie in (0, 0.5)");
  }
  const auto& s = c.synth;
  if (s.accuracies.size() != s.propensities.size() || s.accuracies.size() < 3) {
    throw ValidationError("synth needs >= 3 accuracies and as many propensities");
  }
  if (!(s.class_balance > 0.0 && s.class_balance < 1.0)) {
    throw ValidationError("synth.class_balance must lie in (0, 1)");
  }
}

}  // namespace wsre::pipeline
