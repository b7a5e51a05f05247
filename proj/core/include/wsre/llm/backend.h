#ifndef WSRE_LLM_BACKEND_H_
#define WSRE_LLM_BACKEND_H_

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace wsre::llm {

enum class Capability {
  kText,                // free-text generation (summaries)
  kYesNoLogits,         // logit("yes") and logit("no") at the first position
  kGenerateEmbedding,   // answer text + output-token embeddings
  kEmbedText,           // embedding of the input text itself
};

std::string_view CapabilityName(Capability c);
std::optional<Capability> ParseCapability(std::string_view name);

// What a backend hands back for one request. Either per-token embeddings
// (pooled by the gateway) or an already pooled vector may be present.
struct BackendResponse {
  std::string text;
  std::optional<double> yes_logit;
  std::optional<double> no_logit;
  std::vector<std::vector<double>> token_embeddings;
  std::optional<std::vector<double>> embedding;
};

// What the gateway returns and caches.
struct CompletionResult {
  std::string text;
  std::optional<double> yes_logit;
  std::optional<double> no_logit;
  std::optional<std::vector<double>> embedding;

  friend bool operator==(const CompletionResult&,
                         const CompletionResult&) = default;
};

class Backend {
 public:
  virtual ~Backend() = default;

  // Stable identifier used in cache keys ("stub", "http-chat", ...).
  virtual std::string_view kind() const = 0;
  virtual bool Supports(Capability c) const = 0;

  // Throws TransportError on failure; the gateway handles retries.
  virtual BackendResponse Call(Capability c, std::string_view prompt) = 0;
};

enum class BackendKind { kHttpChat, kHttpScoring, kReplay, kStub };

std::string_view BackendKindName(BackendKind k);
std::optional<BackendKind> ParseBackendKind(std::string_view name);

struct RetryPolicy {
  int max_retries = 2;
  std::chrono::milliseconds backoff{200};
};

struct BackendConfig {
  BackendKind kind = BackendKind::kStub;
  std::string endpoint;
  std::string model = "stub";
  int n_hidden = 64;
  int max_in_flight = 4;
  std::chrono::milliseconds timeout{60000};
  RetryPolicy retry;
  std::uint64_t seed = 0;
  // Sampling temperature for live chat backends; unset leaves the server
  // default.
  std::optional<double> temperature;
  // Name of the environment variable holding the API key.
  std::string api_key_env = "WSRE_API_KEY";
  // Replay only: cache-key backend kind the recording was made with.
  std::string recorded_kind = "http-scoring";
  std::optional<std::filesystem::path> cache_path;
};

// Throws ValidationError for invalid configurations (n_hidden <= 0,
// replay without a cache path, ...).
void ValidateConfig(const BackendConfig& config);

}  // namespace wsre::llm

#endif  // WSRE_LLM_BACKEND_H_
