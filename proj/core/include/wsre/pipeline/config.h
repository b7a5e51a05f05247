#ifndef WSRE_PIPELINE_CONFIG_H_
#define WSRE_PIPELINE_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wsre/labelmodel/label_model.h"
#include "wsre/labelmodel/logistic.h"
#include "wsre/labelmodel/votes.h"
#include "wsre/llm/backend.h"
#include "wsre/predict.h"

namespace wsre::pipeline {

struct PriorConfig {
  bool enabled = true;
  double fraction = 1.0;
  double lambda = 0.5;
  double smoothing = 0.0;
  std::uint64_t seed = 0;
};

struct SynthConfig {
  std::vector<double> accuracies = {0.85, 0.70, 0.60};
  std::vector<double> propensities = {0.8, 0.8, 0.8};
  double class_balance = 0.3;
  std::size_t n = 10000;
  std::uint64_t seed = 42;
  double tolerance = 0.05;
};

struct RunConfig {
  std::filesystem::path corpus;
  std::filesystem::path schema;
  std::filesystem::path output_dir = "wsre-out";
  std::optional<std::filesystem::path> ignore_set;

  llm::BackendConfig backend;
  bool text_fallback = false;

  bool summarize = true;
  bool relation_specific = false;  // score Logit_SR for every relation
  bool include_sr = false;         // use mean Logit_SR as a label-model source
  bool sr_distribution = false;    // relation distribution from Logit_SR, not cosine
  std::vector<std::string> paraphrases;  // empty: the default three

  PriorConfig prior;
  double percentile = 1.0;
  predict::Pooling pooling = predict::Pooling::kGlobal;
  labelmodel::BinarizeOptions thresholds;
  double re_threshold = 0.0;
  predict::MaskMode mode = predict::MaskMode::kDataProgramming;
  labelmodel::FitOptions label_model;
  labelmodel::LogisticOptions logistic;
  SynthConfig synth;

  int workers = 4;
  bool embedding_sidecar = false;
};

// Starts from `base` and overrides every key present in `j`. Unknown keys
// throw ValidationError so that typos do not silently fall back.
RunConfig ConfigFromJson(const nlohmann::json& j, RunConfig base = {});
nlohmann::json ConfigToJson(const RunConfig& config);
RunConfig LoadConfig(const std::filesystem::path& path);

// FNV-1a of the canonical JSON, leaving out output and cache locations so
// that relocated runs share a hash.
std::string ConfigHash(const RunConfig& config);

// Range checks on numeric settings; path existence is checked per stage.
void ValidateRunConfig(const RunConfig& config);

}  // namespace wsre::pipeline

#endif  // WSRE_PIPELINE_CONFIG_H_
