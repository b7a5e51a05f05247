#ifndef WSRE_LLM_GATEWAY_H_
#define WSRE_LLM_GATEWAY_H_

#include <atomic>
#include <cstdint>
#include <memory>
#include <semaphore>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wsre/llm/backend.h"
#include "wsre/llm/cache.h"

namespace wsre::llm {

struct GatewayStats {
  std::uint64_t backend_calls = 0;  // attempts that reached the backend
  std::uint64_t cache_hits = 0;
  std::uint64_t retries = 0;
  int max_in_flight_observed = 0;
};

struct Summary {
  std::string text;
  // Empty completion; callers substitute the original document.
  bool degraded = false;
};

struct YesNoScore {
  double value = 0.0;
  // Derived from the completion text rather than token logits.
  bool degraded = false;
};

struct Generation {
  std::string text;
  std::vector<double> embedding;
};

// Mean of per-token embeddings. Throws ValidationError on ragged input.
std::vector<double> MeanPool(std::span<const std::vector<double>> tokens);

// Text-match fallback: +1 if the completion starts with "yes"
// (case-insensitive), -1 for "no", 0 otherwise.
double TextMatchScore(std::string_view completion);

// Uniform, cached, concurrency-bounded access to one model backend.
// Shareable across threads.
class Gateway {
 public:
  struct Options {
    std::string model = "stub";
    int n_hidden = 64;
    int max_in_flight = 4;
    RetryPolicy retry;
    // Cache-key backend kind; defaults to backend->kind(). Replay gateways
    // set it to the kind the recording was made with.
    std::string cache_kind;
    // Fall back to TextMatchScore when the backend lacks logits.
    bool text_fallback = false;
  };

  Gateway(std::unique_ptr<Backend> backend, Options options,
          std::shared_ptr<ResponseCache> cache = nullptr);

  Gateway(const Gateway&) = delete;
  Gateway& operator=(const Gateway&) = delete;

  Summary Summarize(std::string_view document_text,
                    std::string_view entity_name);

  // logit(yes) - logit(no). Throws CapabilityError when the backend has no
  // logits and text fallback is disabled.
  double YesNoLogit(std::string_view prompt);
  YesNoScore ScoreYesNo(std::string_view prompt);

  Generation GenerateWithEmbedding(std::string_view prompt);
  std::vector<double> EmbedText(std::string_view text);

  GatewayStats stats() const;
  int n_hidden() const { return options_.n_hidden; }
  const Backend& backend() const { return *backend_; }

 private:
  CompletionResult Fetch(Capability capability, std::string_view prompt);
  CompletionResult CallWithRetries(Capability capability,
                                   std::string_view prompt);
  void CheckEmbedding(const std::vector<double>& v) const;

  std::unique_ptr<Backend> backend_;
  Options options_;
  std::shared_ptr<ResponseCache> cache_;
  std::counting_semaphore<> slots_;
  std::atomic<int> in_flight_{0};
  std::atomic<int> max_in_flight_observed_{0};
  std::atomic<std::uint64_t> backend_calls_{0};
  std::atomic<std::uint64_t> cache_hits_{0};
  std::atomic<std::uint64_t> retries_{0};
};

// Builds the backend named by `config` and wraps it in a gateway with a
// cache at config.cache_path (in-memory if unset).
std::unique_ptr<Gateway> MakeGateway(const BackendConfig& config,
                                     bool text_fallback = false);

std::unique_ptr<Backend> MakeBackend(const BackendConfig& config);

}  // namespace wsre::llm

#endif  // WSRE_LLM_GATEWAY_H_
