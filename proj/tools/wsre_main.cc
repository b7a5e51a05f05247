// wsre: weakly supervised document-level relation extraction pipeline.
//
//   wsre <stage> [--config run.json] [overrides...]
//
// Exit codes: 0 ok, 1 validation, 2 transport, 3 numerical failure.

#include <iostream>
#include <optional>
#include <string>
#include <utility>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "wsre/error.h"
#include "wsre/eval.h"
#include "wsre/pipeline/config.h"
#include "wsre/pipeline/stages.h"

namespace {

struct Overrides {
  std::string config;
  std::string corpus, schema, output_dir, ignore_set, cache;
  std::string backend, endpoint, model, recorded_kind, mode, pooling;
  std::optional<int> n_hidden, max_in_flight, workers, max_retries;
  std::optional<std::uint64_t> seed, prior_seed;
  std::optional<double> percentile, prior_fraction, prior_lambda, smoothing, re_threshold,
      temperature;
  bool no_summarize = false, relation_specific = false, include_sr = false,
       text_fallback = false, embedding_sidecar = false, no_prior = false;
};

void AddOptions(CLI::App& app, Overrides& o) {
  app.add_option("--config", o.config, "Run configuration JSON");
  app.add_option("--corpus", o.corpus, "DocRED-format corpus");
  app.add_option("--schema", o.schema, "Relation schema (rel_info JSON)");
  app.add_option("--output-dir", o.output_dir, "Artifact directory");
  app.add_option("--ignore-set", o.ignore_set, "Ign F1 ignore set");
  app.add_option("--cache", o.cache, "Response cache (JSON lines)");
  app.add_option("--backend", o.backend, "http-chat | http-scoring | replay | stub");
  app.add_option("--endpoint", o.endpoint, "Backend URL");
  app.add_option("--model", o.model, "Model identifier");
  app.add_option("--recorded-kind", o.recorded_kind, "Replay: backend kind of the recording");
  app.add_option("--n-hidden", o.n_hidden, "Embedding width");
  app.add_option("--max-in-flight", o.max_in_flight, "Concurrent backend requests");
  app.add_option("--max-retries", o.max_retries, "Retries per request");
  app.add_option("--temperature", o.temperature, "Chat sampling temperature");
  app.add_option("--workers", o.workers, "Scoring threads");
  app.add_option("--seed", o.seed, "Backend seed");
  app.add_option("--mode", o.mode, "simple_re | mv | dp | dp_smoothed | true_na");
  app.add_option("--percentile", o.percentile, "Top-p percentile of candidates (percent)");
  app.add_option("--pooling", o.pooling, "global | per_pair");
  app.add_option("--prior-fraction", o.prior_fraction, "Fraction of documents for the prior");
  app.add_option("--prior-lambda", o.prior_lambda, "Prior mixture weight");
  app.add_option("--prior-seed", o.prior_seed, "Document sampling seed");
  app.add_option("--smoothing", o.smoothing, "Prior count smoothing");
  app.add_option("--re-threshold", o.re_threshold, "Simple RE logit threshold");
  app.add_flag("--no-summarize", o.no_summarize, "Use raw document text as context");
  app.add_flag("--no-prior", o.no_prior, "Do not mix in the type prior");
  app.add_flag("--relation-specific", o.relation_specific, "Score relation-specific logits");
  app.add_flag("--include-sr", o.include_sr, "Use mean relation-specific logit as a source");
  app.add_flag("--text-fallback", o.text_fallback, "Text-match scoring without logits");
  app.add_flag("--embedding-sidecar", o.embedding_sidecar, "Store embeddings in a binary file");
}

wsre::pipeline::RunConfig BuildConfig(const Overrides& o) {
  using nlohmann::json;
  wsre::pipeline::RunConfig config;
  if (!o.config.empty()) config = wsre::pipeline::LoadConfig(o.config);

  json j = json::object();
  json backend = json::object();
  json prior = json::object();
  if (!o.corpus.empty()) j["corpus"] = o.corpus;
  if (!o.schema.empty()) j["schema"] = o.schema;
  if (!o.output_dir.empty()) j["output_dir"] = o.output_dir;
  if (!o.ignore_set.empty()) j["ignore_set"] = o.ignore_set;
  if (!o.cache.empty()) backend["cache"] = o.cache;
  if (!o.backend.empty()) backend["kind"] = o.backend;
  if (!o.endpoint.empty()) backend["endpoint"] = o.endpoint;
  if (!o.model.empty()) backend["model"] = o.model;
  if (!o.recorded_kind.empty()) backend["recorded_kind"] = o.recorded_kind;
  if (o.n_hidden) backend["n_hidden"] = *o.n_hidden;
  if (o.max_in_flight) backend["max_in_flight"] = *o.max_in_flight;
  if (o.max_retries) backend["max_retries"] = *o.max_retries;
  if (o.temperature) backend["temperature"] = *o.temperature;
  if (o.seed) backend["seed"] = *o.seed;
  if (o.text_fallback) backend["text_fallback"] = true;
  if (o.workers) j["workers"] = *o.workers;
  if (!o.mode.empty()) j["mode"] = o.mode;
  if (o.percentile) j["percentile"] = *o.percentile;
  if (!o.pooling.empty()) j["pooling"] = o.pooling;
  if (o.prior_fraction) prior["fraction"] = *o.prior_fraction;
  if (o.prior_lambda) prior["lambda"] = *o.prior_lambda;
  if (o.prior_seed) prior["seed"] = *o.prior_seed;
  if (o.smoothing) prior["smoothing"] = *o.smoothing;
  if (o.no_prior) prior["enabled"] = false;
  if (o.re_threshold) j["re_threshold"] = *o.re_threshold;
  if (o.no_summarize) j["summarize"] = false;
  if (o.relation_specific) j["relation_specific"] = true;
  if (o.include_sr) j["include_sr"] = true;
  if (o.embedding_sidecar) j["embedding_sidecar"] = true;
  if (!backend.empty()) j["backend"] = backend;
  if (!prior.empty()) j["prior"] = prior;
  return wsre::pipeline::ConfigFromJson(j, config);
}

void PrintReport(const wsre::eval::EvalReport& report, const std::string& mode) {
  const wsre::eval::ReportRow row{mode, report};
  std::cout << wsre::eval::FormatTable({&row, 1});
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weakly supervised document-level relation extraction"};
  app.require_subcommand(1);
  app.fallthrough();
  Overrides o;
  AddOptions(app, o);

  const std::pair<const char*, const char*> stages[] = {
      {"summarize", "Summarize each entity from its document"},
      {"score", "Prompt the model for every entity pair"},
      {"fit-prior", "Estimate the type-relation prior"},
      {"aggregate", "Fit the label model and write posteriors"},
      {"predict", "Select candidates and apply the mask"},
      {"evaluate", "Score predictions against the gold labels"},
      {"synth", "Label-model recovery check on synthetic votes"},
      {"run-all", "Every stage the configured mode needs"},
      {"print-config", "Print the effective configuration"},
  };
  for (const auto& [name, help] : stages) app.add_subcommand(name, help);

  CLI11_PARSE(app, argc, argv);
  const std::string stage = app.get_subcommands().front()->get_name();

  try {
    auto config = BuildConfig(o);
    if (stage == "print-config") {
      std::cout << wsre::pipeline::ConfigToJson(config).dump(2) << '\n';
      return 0;
    }
    const std::string mode(wsre::predict::MaskModeName(config.mode));
    wsre::pipeline::Pipeline pipeline(std::move(config));
    if (stage == "summarize") {
      pipeline.Summarize();
    } else if (stage == "score") {
      pipeline.Score();
    } else if (stage == "fit-prior") {
      pipeline.FitPrior();
    } else if (stage == "aggregate") {
      pipeline.Aggregate();
    } else if (stage == "predict") {
      pipeline.Predict();
    } else if (stage == "evaluate") {
      PrintReport(pipeline.Evaluate(), mode);
    } else if (stage == "synth") {
      std::cout << pipeline.Synth().dump(2) << '\n';
    } else if (stage == "run-all") {
      PrintReport(pipeline.RunAll(), mode);
    }
    return 0;
  } catch (const wsre::TransportError& e) {
    std::cerr << "transport error: " << e.what() << '\n';
    return 2;
  } catch (const wsre::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 3;
  } catch (const wsre::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
