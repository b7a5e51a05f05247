#ifndef WSRE_LLM_BACKENDS_H_
#define WSRE_LLM_BACKENDS_H_

#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

#include "wsre/llm/backend.h"

namespace wsre::llm {

// Deterministic model stand-in. A seeded hash of (capability, prompt)
// drives a yes-minus-no logit uniform in [-3, 3], a unit-norm embedding and
// a templated completion, so whole pipelines run without any model.
class StubBackend : public Backend {
 public:
  StubBackend(std::uint64_t seed, int n_hidden);

  std::string_view kind() const override { return "stub"; }
  bool Supports(Capability) const override { return true; }
  BackendResponse Call(Capability c, std::string_view prompt) override;

  // The unit vector the stub would return for this key; exposed for tests.
  static std::vector<double> UnitVector(std::uint64_t key, int n_hidden);

 private:
  std::uint64_t seed_;
  int n_hidden_;
};

// Serves recorded responses only. Every request must already be in the
// cache; reaching Call() means a miss and throws TransportError.
class ReplayBackend : public Backend {
 public:
  std::string_view kind() const override { return "replay"; }
  bool Supports(Capability) const override { return true; }
  BackendResponse Call(Capability c, std::string_view prompt) override;
};

struct HttpTarget {
  std::string scheme_host_port;  // "https://api.example.com:443"
  std::string path;              // "/v1/chat/completions"
};

// Splits an absolute http(s) URL. Throws ValidationError otherwise.
HttpTarget SplitUrl(const std::string& url);

// OpenAI-compatible chat completions: text generation only.
//   POST {model, messages: [{role: "user", content}]}
//   -> {choices: [{message: {content}}]}
class ChatBackend : public Backend {
 public:
  explicit ChatBackend(const BackendConfig& config);

  std::string_view kind() const override { return "http-chat"; }
  bool Supports(Capability c) const override { return c == Capability::kText; }
  BackendResponse Call(Capability c, std::string_view prompt) override;

  nlohmann::json RequestBody(std::string_view prompt) const;
  static BackendResponse ParseResponse(const nlohmann::json& body);

 private:
  BackendConfig config_;
  HttpTarget target_;
  std::string api_key_;
};

// Generic scoring server with logit and embedding access.
//   POST {model, prompt, want: [...], embed_input?}
//   -> {text, yes_logit, no_logit, embedding, token_embeddings?}
class ScoringBackend : public Backend {
 public:
  explicit ScoringBackend(const BackendConfig& config);

  std::string_view kind() const override { return "http-scoring"; }
  bool Supports(Capability) const override { return true; }
  BackendResponse Call(Capability c, std::string_view prompt) override;

  nlohmann::json RequestBody(Capability c, std::string_view prompt) const;
  static BackendResponse ParseResponse(const nlohmann::json& body);

 private:
  BackendConfig config_;
  HttpTarget target_;
  std::string api_key_;
};

}  // namespace wsre::llm

#endif  // WSRE_LLM_BACKENDS_H_
