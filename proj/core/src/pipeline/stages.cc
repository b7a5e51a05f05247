#include "wsre/pipeline/stages.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <utility>

#include "wsre/error.h"
#include "wsre/labelmodel/io.h"
#include "wsre/labelmodel/label_model.h"
#include "wsre/labelmodel/logistic.h"
#include "wsre/labelmodel/votes.h"
#include "wsre/llm/prompts.h"
#include "wsre/predict.h"
#include "wsre/prior.h"
#include "wsre/scores_io.h"
#include "wsre/scoring.h"

namespace wsre::pipeline {
namespace {

using nlohmann::json;

void WriteJson(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

void WriteText(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << text;
}

json ReadJson(const std::filesystem::path& path) {
  const std::string text = corpus::ReadFile(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("cannot parse " + path.string() + ": " + e.what());
  }
}

std::vector<json> ReadJsonLines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::vector<json> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::parse_error& e) {
      throw ParseError(path.string() + " line " + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

json NullableNumber(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double NumberOrNaN(const json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nan("");
  return j[key].get<double>();
}

double Brier(std::span<const double> probs, std::span<const int> labels) {
  double sum = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double y = labels[i] > 0 ? 1.0 : 0.0;
    sum += (probs[i] - y) * (probs[i] - y);
  }
  return sum / static_cast<double>(probs.size());
}

}  // namespace

bool NeedsAggregate(predict::MaskMode mode) {
  return mode == predict::MaskMode::kMajorityVote ||
         mode == predict::MaskMode::kDataProgramming ||
         mode == predict::MaskMode::kDpSmoothed;
}

Pipeline::Pipeline(RunConfig config, LogFn log)
    : Pipeline(std::move(config), nullptr, std::move(log)) {}

Pipeline::Pipeline(RunConfig config, std::shared_ptr<llm::Gateway> gateway, LogFn log)
    : config_(std::move(config)),
      config_hash_(ConfigHash(config_)),
      gateway_(std::move(gateway)),
      log_(std::move(log)) {
  ValidateRunConfig(config_);
  if (!log_) log_ = [](std::string_view m) { std::cerr << "warning: " << m << '\n'; };
}

std::filesystem::path Pipeline::StageDir(std::string_view stage) const {
  return config_.output_dir / std::string(stage);
}

llm::Gateway& Pipeline::gateway() {
  if (!gateway_) gateway_ = llm::MakeGateway(config_.backend, config_.text_fallback);
  return *gateway_;
}

const corpus::Corpus& Pipeline::Corpus() {
  if (!corpus_) {
    if (config_.corpus.empty()) throw ValidationError("no corpus path configured");
    corpus_ = std::make_unique<corpus::Corpus>(corpus::LoadCorpus(config_.corpus));
  }
  return *corpus_;
}

const corpus::RelationSchema& Pipeline::Schema() {
  if (!schema_) {
    if (config_.schema.empty()) throw ValidationError("no schema path configured");
    schema_ = std::make_unique<corpus::RelationSchema>(corpus::LoadSchema(config_.schema));
  }
  return *schema_;
}

std::filesystem::path Pipeline::Require(std::string_view stage, std::string_view file) const {
  auto path = StageDir(stage) / std::string(file);
  if (!std::filesystem::exists(path)) {
    throw ValidationError("missing artifact " + path.string() + "; run the '" +
                          std::string(stage) + "' stage first");
  }
  return path;
}

void Pipeline::Warn(const std::string& message) const { log_(message); }

void Pipeline::WriteManifest(std::string_view stage, const std::vector<std::string>& inputs,
                             const std::vector<std::string>& outputs,
                             const std::vector<std::string>& warnings) const {
  json manifest = {
      {"stage", stage},
      {"config_hash", config_hash_},
      {"seeds",
       {{"backend", config_.backend.seed},
        {"prior", config_.prior.seed},
        {"logistic", config_.logistic.seed},
        {"synth", config_.synth.seed}}},
      {"inputs", inputs},
      {"outputs", outputs},
      {"warnings", warnings},
  };
  WriteJson(StageDir(stage) / "manifest.json", manifest);
}

void Pipeline::Summarize() {
  const auto& corpus = Corpus();
  std::vector<std::pair<std::size_t, int>> jobs;
  for (const auto& doc : corpus.documents) {
    for (const auto& e : doc.entities) jobs.emplace_back(doc.index, e.id);
  }
  struct Result {
    std::string summary;
    bool degraded = false;
    std::string error;
  };
  std::vector<Result> results(jobs.size());
  llm::Gateway& gw = gateway();
  scoring::ParallelFor(jobs.size(), config_.workers, [&](std::size_t i) {
    const auto& doc = corpus.documents[jobs[i].first];
    const auto& entity = doc.entities[static_cast<std::size_t>(jobs[i].second)];
    try {
      const llm::Summary s = gw.Summarize(doc.Text(), entity.Name());
      results[i] = {s.text, s.degraded, ""};
    } catch (const TransportError& e) {
      results[i] = {"", true, e.what()};
    }
  });

  std::filesystem::create_directories(StageDir(kSummarizeStage));
  std::ofstream out(StageDir(kSummarizeStage) / "summaries.jsonl", std::ios::binary);
  std::vector<std::string> warnings;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const auto& doc = corpus.documents[jobs[i].first];
    const auto& entity = doc.entities[static_cast<std::size_t>(jobs[i].second)];
    json line = {{"doc_index", jobs[i].first},
                 {"entity", jobs[i].second},
                 {"name", entity.Name()},
                 {"summary", results[i].summary},
                 {"degraded", results[i].degraded}};
    if (!results[i].error.empty()) {
      line["error"] = results[i].error;
      warnings.push_back("document " + std::to_string(jobs[i].first) + " entity " +
                         std::to_string(jobs[i].second) + ": " + results[i].error);
    }
    out << line.dump() << '\n';
  }
  out.close();
  for (const auto& w : warnings) Warn(w);
  WriteManifest(kSummarizeStage, {config_.corpus.string()}, {"summaries.jsonl"}, warnings);
}

void Pipeline::Score() {
  const auto& corpus = Corpus();
  const auto& schema = Schema();

  // (doc, entity) -> usable summary; degraded entries fall back to the text.
  std::map<std::pair<std::size_t, int>, std::string> summaries;
  if (config_.summarize) {
    for (const auto& line : ReadJsonLines(Require(kSummarizeStage, "summaries.jsonl"))) {
      if (line.value("degraded", false)) continue;
      summaries[{line.at("doc_index").get<std::size_t>(), line.at("entity").get<int>()}] =
          line.at("summary").get<std::string>();
    }
  }
  std::vector<std::string> texts;
  for (const auto& doc : corpus.documents) texts.push_back(doc.Text());

  const scoring::ContextFn context = [&](const corpus::EntityPair& pair) {
    const std::string& text = texts[pair.doc_index];
    if (!config_.summarize) return text;
    auto side = [&](int entity) -> const std::string& {
      auto it = summaries.find({pair.doc_index, entity});
      return it == summaries.end() ? text : it->second;
    };
    return llm::BuildContext(side(pair.head), side(pair.tail));
  };

  llm::Gateway& gw = gateway();
  const Eigen::MatrixXd relation_embeddings = scoring::EmbedRelations(schema, gw);
  scoring::ScoreOptions options;
  options.relation_specific = config_.relation_specific;
  options.paraphrases = config_.paraphrases;
  options.workers = config_.workers;
  const auto scores =
      scoring::ScoreCorpus(corpus, schema, relation_embeddings, context, gw, options);

  std::vector<std::string> warnings;
  std::size_t unscored = 0;
  for (const auto& s : scores) unscored += !s.scored;
  if (unscored) {
    warnings.push_back(std::to_string(unscored) +
                       " pair(s) unscored; they are excluded from label-model fitting");
  }
  std::filesystem::create_directories(StageDir(kScoreStage));
  scoring::WriteScores(StageDir(kScoreStage) / "scores.jsonl", scores, config_.embedding_sidecar);
  for (const auto& w : warnings) Warn(w);
  std::vector<std::string> outputs = {"scores.jsonl"};
  if (config_.embedding_sidecar) {
    outputs.push_back("scores.jsonl.emb.bin");
    outputs.push_back("scores.jsonl.emb.json");
  }
  WriteManifest(kScoreStage, {config_.corpus.string(), config_.schema.string()}, outputs,
                warnings);
}

void Pipeline::FitPrior() {
  prior::PriorOptions options;
  options.fraction = config_.prior.fraction;
  options.smoothing = config_.prior.smoothing;
  options.lambda = config_.prior.lambda;
  options.seed = config_.prior.seed;
  const auto estimated = prior::EstimatePrior(Corpus(), Schema(), options);
  std::filesystem::create_directories(StageDir(kFitPriorStage));
  WriteJson(StageDir(kFitPriorStage) / "prior.json", prior::PriorToJson(estimated));
  WriteManifest(kFitPriorStage, {config_.corpus.string(), config_.schema.string()},
                {"prior.json"}, {});
}

void Pipeline::Aggregate() {
  const auto scores = scoring::ReadScores(Require(kScoreStage, "scores.jsonl"));
  const auto prior_json = ReadJson(Require(kFitPriorStage, "prior.json"));
  const double balance = prior::PriorFromJson(prior_json).class_balance();
  if (!(balance > 0.0 && balance < 1.0)) {
    throw ValidationError("class balance from the prior is " + std::to_string(balance) +
                          "; it must lie in (0, 1)");
  }

  std::vector<std::size_t> rows;
  std::vector<scoring::PairScores> scored;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i].scored) {
      rows.push_back(i);
      scored.push_back(scores[i]);
    }
  }
  if (scored.empty()) throw ValidationError("no scored pairs to aggregate");

  labelmodel::BinarizeOptions bin = config_.thresholds;
  bin.include_sr = config_.include_sr;
  auto binarized = labelmodel::BinarizeSources(scored, bin);
  std::vector<std::string> warnings = binarized.warnings;

  // LFs that never vote carry no information and break the moment fit.
  std::vector<std::size_t> keep;
  for (std::size_t lf = 0; lf < binarized.votes.cols(); ++lf) {
    bool votes = false;
    for (std::size_t i = 0; i < binarized.votes.rows() && !votes; ++i) {
      votes = binarized.votes(i, lf) != labelmodel::Vote::kAbstain;
    }
    if (votes) {
      keep.push_back(lf);
    } else {
      warnings.push_back("labeling function '" + binarized.votes.lf_names()[lf] +
                         "' left out of the label model");
    }
  }
  const labelmodel::VoteMatrix votes = binarized.votes.SelectColumns(keep);
  const auto fit = labelmodel::FitLabelModel(votes, balance, config_.label_model);
  const auto posteriors = labelmodel::Posteriors(fit.params, votes);
  const auto mv = labelmodel::MajorityVote(votes);

  std::optional<labelmodel::LogisticModel> logistic;
  std::vector<double> smoothed;
  if (config_.mode == predict::MaskMode::kDpSmoothed) {
    const auto width = static_cast<Eigen::Index>(scored.front().oe_embedding.size());
    Eigen::MatrixXd x(static_cast<Eigen::Index>(scored.size()), width);
    for (std::size_t i = 0; i < scored.size(); ++i) {
      const auto& e = scored[i].oe_embedding;
      if (static_cast<Eigen::Index>(e.size()) != width) {
        throw ValidationError("open-ended embeddings have inconsistent widths");
      }
      x.row(static_cast<Eigen::Index>(i)) =
          Eigen::Map<const Eigen::RowVectorXd>(e.data(), width);
    }
    logistic = labelmodel::FitLogistic(x, posteriors, config_.logistic);
    smoothed = logistic->PredictAll(x);
  }

  const auto dir = StageDir(kAggregateStage);
  std::filesystem::create_directories(dir);
  json votes_json = labelmodel::VotesToJson(votes);
  votes_json["rows"] = rows;
  WriteJson(dir / "votes.json", votes_json);
  json params = labelmodel::ParamsToJson(fit.params, votes.lf_names());
  params["raw_accuracies"] = fit.raw_accuracies;
  params["residual_norm"] = fit.residual_norm;
  params["iterations"] = fit.iterations;
  WriteJson(dir / "params.json", params);

  std::vector<std::string> outputs = {"votes.json", "params.json", "posteriors.jsonl"};
  std::ofstream out(dir / "posteriors.jsonl", std::ios::binary);
  std::size_t r = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const auto& p = scores[i].pair;
    json line = {{"doc_index", p.doc_index}, {"h", p.head}, {"t", p.tail},
                 {"scored", scores[i].scored}, {"mv", nullptr}, {"dp", nullptr},
                 {"dp_smoothed", nullptr}};
    if (r < rows.size() && rows[r] == i) {
      line["mv"] = mv[r];
      line["dp"] = posteriors[r];
      if (logistic) line["dp_smoothed"] = smoothed[r];
      ++r;
    }
    out << line.dump() << '\n';
  }
  out.close();
  if (logistic) {
    WriteJson(dir / "logistic.json", labelmodel::LogisticToJson(*logistic));
    labelmodel::WriteLossTrace(dir / "loss_trace.csv", logistic->loss_trace);
    outputs.push_back("logistic.json");
    outputs.push_back("loss_trace.csv");
  }
  for (const auto& w : warnings) Warn(w);
  WriteManifest(kAggregateStage, {"score/scores.jsonl", "fit-prior/prior.json"}, outputs,
                warnings);
}

void Pipeline::Predict() {
  const auto& corpus = Corpus();
  const auto& schema = Schema();
  const auto scores = scoring::ReadScores(Require(kScoreStage, "scores.jsonl"));
  std::vector<std::string> inputs = {"score/scores.jsonl"};

  std::optional<prior::TypeRelationPrior> type_prior;
  if (config_.prior.enabled) {
    type_prior = prior::PriorFromJson(ReadJson(Require(kFitPriorStage, "prior.json")));
    inputs.push_back("fit-prior/prior.json");
  }
  const auto dists = predict::FuseDistributions(
      scores, type_prior ? &*type_prior : nullptr, config_.sr_distribution);
  std::vector<corpus::EntityPair> pairs;
  for (const auto& s : scores) pairs.push_back(s.pair);
  const auto candidates =
      predict::SelectTopPercentile(pairs, dists, schema, config_.percentile, config_.pooling);

  predict::PredictionSet set;
  switch (config_.mode) {
    case predict::MaskMode::kSimpleRe:
      set = predict::SimpleReMask(candidates, predict::MeanExistenceLogits(scores),
                                  config_.re_threshold);
      break;
    case predict::MaskMode::kTrueNa:
      set = predict::TrueNaMask(candidates, corpus);
      break;
    case predict::MaskMode::kMajorityVote:
    case predict::MaskMode::kDataProgramming:
    case predict::MaskMode::kDpSmoothed: {
      const char* column = config_.mode == predict::MaskMode::kMajorityVote ? "mv"
                           : config_.mode == predict::MaskMode::kDataProgramming
                               ? "dp"
                               : "dp_smoothed";
      const auto lines = ReadJsonLines(Require(kAggregateStage, "posteriors.jsonl"));
      if (lines.size() != scores.size()) {
        throw ValidationError("aggregate output does not match the score file; rerun 'aggregate'");
      }
      std::vector<double> values(lines.size());
      for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto& p = scores[i].pair;
        if (lines[i].at("doc_index").get<std::size_t>() != p.doc_index ||
            lines[i].at("h").get<int>() != p.head || lines[i].at("t").get<int>() != p.tail) {
          throw ValidationError("aggregate output does not match the score file; rerun 'aggregate'");
        }
        values[i] = NumberOrNaN(lines[i], column);
      }
      set = predict::ModelMask(candidates, values, config_.mode);
      inputs.push_back("aggregate/posteriors.jsonl");
      break;
    }
  }

  const auto dir = StageDir(kPredictStage);
  std::filesystem::create_directories(dir);
  WriteJson(dir / "predictions.json", predict::PredictionsToJson(set, corpus));
  WriteJson(dir / "confidences.json", predict::ConfidencesToJson(set));
  for (const auto& w : set.warnings) Warn(w);
  WriteManifest(kPredictStage, inputs, {"predictions.json", "confidences.json"}, set.warnings);
}

eval::EvalReport Pipeline::Evaluate() {
  const auto& corpus = Corpus();
  const auto preds =
      predict::PredictionsFromJson(ReadJson(Require(kPredictStage, "predictions.json")), corpus);
  std::set<eval::TripleKey> ignore;
  std::vector<std::string> inputs = {"predict/predictions.json", config_.corpus.string()};
  if (config_.ignore_set) {
    ignore = eval::LoadIgnoreSet(*config_.ignore_set, corpus);
    inputs.push_back(config_.ignore_set->string());
  }
  const auto report = eval::Evaluate(preds, corpus, ignore);

  const auto dir = StageDir(kEvaluateStage);
  std::filesystem::create_directories(dir);
  WriteJson(dir / "report.json", eval::ReportToJson(report));
  const eval::ReportRow row{std::string(predict::MaskModeName(config_.mode)), report};
  WriteText(dir / "report.txt", eval::FormatTable({&row, 1}));
  WriteManifest(kEvaluateStage, inputs, {"report.json", "report.txt"}, {});
  return report;
}

json Pipeline::Synth() {
  const auto& s = config_.synth;
  labelmodel::LabelModelParams truth;
  truth.class_balance = s.class_balance;
  for (std::size_t i = 0; i < s.accuracies.size(); ++i) {
    truth.lfs.push_back({s.accuracies[i], s.propensities[i]});
  }
  const auto sample = labelmodel::GenerateSynthetic(truth, s.n, s.seed);
  const auto fit = labelmodel::FitLabelModel(sample.votes, s.class_balance, config_.label_model);

  std::vector<double> recovered;
  double max_error = 0.0;
  for (std::size_t i = 0; i < truth.lfs.size(); ++i) {
    recovered.push_back(fit.params.lfs[i].accuracy);
    max_error = std::max(max_error, std::abs(recovered[i] - s.accuracies[i]));
  }
  json triplet = nullptr;
  double triplet_gap = std::nan("");
  try {
    const auto t = labelmodel::TripletAccuracies(sample.votes);
    triplet = t;
    triplet_gap = 0.0;
    for (int i = 0; i < 3; ++i) triplet_gap = std::max(triplet_gap, std::abs(t[i] - recovered[i]));
  } catch (const NumericalError& e) {
    Warn(std::string("triplet oracle unavailable: ") + e.what());
  }

  const auto dp = labelmodel::Posteriors(fit.params, sample.votes);
  const auto bayes = labelmodel::Posteriors(truth, sample.votes);
  const auto mv = labelmodel::MajorityVote(sample.votes);
  std::size_t dp_hits = 0, mv_hits = 0;
  for (std::size_t i = 0; i < s.n; ++i) {
    dp_hits += (dp[i] > 0.5 ? 1 : -1) == sample.labels[i];
    mv_hits += mv[i] == sample.labels[i];
  }
  const double n = static_cast<double>(s.n);
  json report = {
      {"n", s.n},
      {"seed", s.seed},
      {"true_accuracies", s.accuracies},
      {"recovered_accuracies", recovered},
      {"raw_accuracies", fit.raw_accuracies},
      {"triplet_accuracies", triplet},
      {"max_abs_error", max_error},
      {"triplet_max_gap", NullableNumber(triplet_gap)},
      {"tolerance", s.tolerance},
      {"within_tolerance", max_error <= s.tolerance},
      {"brier_dp", Brier(dp, sample.labels)},
      {"brier_true_params", Brier(bayes, sample.labels)},
      {"accuracy_dp", static_cast<double>(dp_hits) / n},
      {"accuracy_mv", static_cast<double>(mv_hits) / n},
      {"residual_norm", fit.residual_norm},
      {"iterations", fit.iterations},
  };
  const auto dir = StageDir(kSynthStage);
  std::filesystem::create_directories(dir);
  WriteJson(dir / "report.json", report);
  WriteManifest(kSynthStage, {}, {"report.json"}, {});
  return report;
}

eval::EvalReport Pipeline::RunAll() {
  if (config_.summarize) Summarize();
  Score();
  if (config_.prior.enabled || NeedsAggregate(config_.mode)) FitPrior();
  if (NeedsAggregate(config_.mode)) Aggregate();
  Predict();
  return Evaluate();
}

}  // namespace wsre::pipeline
