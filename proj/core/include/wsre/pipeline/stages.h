#ifndef WSRE_PIPELINE_STAGES_H_
#define WSRE_PIPELINE_STAGES_H_

// Pipeline stages. Each stage reads its upstream artifacts from
// <output_dir>/<stage>/ and writes its own next to a manifest.json holding
// the config hash and seeds. Artifacts carry no timestamps, so identical
// config and cache give byte-identical outputs.

#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "wsre/corpus.h"
#include "wsre/eval.h"
#include "wsre/llm/gateway.h"
#include "wsre/pipeline/config.h"

namespace wsre::pipeline {

inline constexpr std::string_view kSummarizeStage = "summarize";
inline constexpr std::string_view kScoreStage = "score";
inline constexpr std::string_view kFitPriorStage = "fit-prior";
inline constexpr std::string_view kAggregateStage = "aggregate";
inline constexpr std::string_view kPredictStage = "predict";
inline constexpr std::string_view kEvaluateStage = "evaluate";
inline constexpr std::string_view kSynthStage = "synth";

using LogFn = std::function<void(std::string_view)>;

class Pipeline {
 public:
  // The gateway is built from config.backend on first use.
  explicit Pipeline(RunConfig config, LogFn log = nullptr);
  // Uses the given gateway for every model call.
  Pipeline(RunConfig config, std::shared_ptr<llm::Gateway> gateway,
           LogFn log = nullptr);

  // summaries.jsonl: one line per (document, entity).
  void Summarize();
  // scores.jsonl (+ embedding sidecar when configured).
  void Score();
  // prior.json.
  void FitPrior();
  // votes.json, params.json, posteriors.jsonl; for dp_smoothed also
  // logistic.json and loss_trace.csv.
  void Aggregate();
  // predictions.json (DocRED result format) and confidences.json.
  void Predict();
  // report.json and report.txt.
  eval::EvalReport Evaluate();
  // Synthetic label-model recovery check; report.json.
  nlohmann::json Synth();
  // Every stage the configured mode needs, in order.
  eval::EvalReport RunAll();

  std::filesystem::path StageDir(std::string_view stage) const;
  const RunConfig& config() const { return config_; }
  llm::Gateway& gateway();

 private:
  const corpus::Corpus& Corpus();
  const corpus::RelationSchema& Schema();
  std::filesystem::path Require(std::string_view stage, std::string_view file) const;
  void WriteManifest(std::string_view stage, const std::vector<std::string>& inputs,
                     const std::vector<std::string>& outputs,
                     const std::vector<std::string>& warnings) const;
  void Warn(const std::string& message) const;

  RunConfig config_;
  std::string config_hash_;
  std::shared_ptr<llm::Gateway> gateway_;
  LogFn log_;
  std::unique_ptr<corpus::Corpus> corpus_;
  std::unique_ptr<corpus::RelationSchema> schema_;
};

// True for the modes that read label-model outputs.
bool NeedsAggregate(predict::MaskMode mode);

}  // namespace wsre::pipeline

#endif  // WSRE_PIPELINE_STAGES_H_
