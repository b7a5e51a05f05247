#include "wsre/llm/gateway.h"

#include <algorithm>
#include <cctype>
#include <thread>

#include "wsre/error.h"
#include "wsre/llm/prompts.h"

namespace wsre::llm {
namespace {

class InFlightGuard {
 public:
  InFlightGuard(std::counting_semaphore<>& slots, std::atomic<int>& in_flight,
                std::atomic<int>& max_observed)
      : slots_(slots), in_flight_(in_flight) {
    slots_.acquire();
    const int now = in_flight_.fetch_add(1) + 1;
    int prev = max_observed.load();
    while (now > prev && !max_observed.compare_exchange_weak(prev, now)) {
    }
  }
  ~InFlightGuard() {
    in_flight_.fetch_sub(1);
    slots_.release();
  }
  InFlightGuard(const InFlightGuard&) = delete;
  InFlightGuard& operator=(const InFlightGuard&) = delete;

 private:
  std::counting_semaphore<>& slots_;
  std::atomic<int>& in_flight_;
};

}  // namespace

std::vector<double> MeanPool(std::span<const std::vector<double>> tokens) {
  if (tokens.empty()) return {};
  std::vector<double> mean(tokens.front().size(), 0.0);
  for (const auto& t : tokens) {
    if (t.size() != mean.size()) {
      throw ValidationError("token embeddings have inconsistent widths");
    }
    for (std::size_t i = 0; i < t.size(); ++i) mean[i] += t[i];
  }
  const double n = static_cast<double>(tokens.size());
  for (double& v : mean) v /= n;
  return mean;
}

double TextMatchScore(std::string_view completion) {
  const auto first = completion.find_first_not_of(" \t\r\n\"'");
  if (first == std::string_view::npos) return 0.0;
  auto starts_with = [&](std::string_view word) {
    if (completion.size() - first < word.size()) return false;
    for (std::size_t i = 0; i < word.size(); ++i) {
      if (std::tolower(static_cast<unsigned char>(completion[first + i])) != word[i]) {
        return false;
      }
    }
    return true;
  };
  if (starts_with("yes")) return 1.0;
  if (starts_with("no")) return -1.0;
  return 0.0;
}

Gateway::Gateway(std::unique_ptr<Backend> backend, Options options,
                 std::shared_ptr<ResponseCache> cache)
    : backend_(std::move(backend)),
      options_(std::move(options)),
      cache_(cache ? std::move(cache) : std::make_shared<ResponseCache>()),
      slots_(std::max(1, options_.max_in_flight)) {
  if (options_.n_hidden <= 0) throw ValidationError("n_hidden must be positive");
  if (options_.cache_kind.empty()) options_.cache_kind = std::string(backend_->kind());
}

CompletionResult Gateway::CallWithRetries(Capability capability,
                                          std::string_view prompt) {
  InFlightGuard guard(slots_, in_flight_, max_in_flight_observed_);
  for (int attempt = 0;; ++attempt) {
    backend_calls_.fetch_add(1);
    try {
      BackendResponse resp = backend_->Call(capability, prompt);
      CompletionResult r;
      r.text = std::move(resp.text);
      r.yes_logit = resp.yes_logit;
      r.no_logit = resp.no_logit;
      if (!resp.token_embeddings.empty()) {
        r.embedding = MeanPool(resp.token_embeddings);
      } else {
        r.embedding = std::move(resp.embedding);
      }
      return r;
    } catch (const TransportError&) {
      if (attempt >= options_.retry.max_retries) throw;
      retries_.fetch_add(1);
      std::this_thread::sleep_for(options_.retry.backoff * (1 << attempt));
    }
  }
}

CompletionResult Gateway::Fetch(Capability capability, std::string_view prompt) {
  CacheKey key{options_.cache_kind, options_.model, capability,
               std::string(prompt)};
  if (auto hit = cache_->Lookup(key)) {
    cache_hits_.fetch_add(1);
    return *std::move(hit);
  }
  if (!backend_->Supports(capability)) {
    throw CapabilityError("backend '" + std::string(backend_->kind()) +
                          "' does not support " +
                          std::string(CapabilityName(capability)));
  }
  CompletionResult result = CallWithRetries(capability, prompt);
  cache_->Store(key, result);
  return result;
}

void Gateway::CheckEmbedding(const std::vector<double>& v) const {
  if (static_cast<int>(v.size()) != options_.n_hidden) {
    throw ValidationError("backend embedding has width " +
                          std::to_string(v.size()) + ", expected n_hidden = " +
                          std::to_string(options_.n_hidden));
  }
}

Summary Gateway::Summarize(std::string_view document_text,
                           std::string_view entity_name) {
  CompletionResult r =
      Fetch(Capability::kText, SummarizePrompt(document_text, entity_name));
  Summary s;
  const auto b = r.text.find_first_not_of(" \t\r\n");
  const auto e = r.text.find_last_not_of(" \t\r\n");
  if (b == std::string::npos) {
    s.degraded = true;
  } else {
    s.text = r.text.substr(b, e - b + 1);
  }
  return s;
}

YesNoScore Gateway::ScoreYesNo(std::string_view prompt) {
  if (backend_->Supports(Capability::kYesNoLogits)) {
    CompletionResult r = Fetch(Capability::kYesNoLogits, prompt);
    if (!r.yes_logit || !r.no_logit) {
      throw TransportError("backend response lacks yes/no logits");
    }
    return {*r.yes_logit - *r.no_logit, false};
  }
  if (options_.text_fallback && backend_->Supports(Capability::kText)) {
    CompletionResult r = Fetch(Capability::kText, prompt);
    return {TextMatchScore(r.text), true};
  }
  throw CapabilityError("backend '" + std::string(backend_->kind()) +
                        "' exposes no yes/no logits");
}

double Gateway::YesNoLogit(std::string_view prompt) {
  return ScoreYesNo(prompt).value;
}

Generation Gateway::GenerateWithEmbedding(std::string_view prompt) {
  CompletionResult r = Fetch(Capability::kGenerateEmbedding, prompt);
  if (!r.embedding) throw TransportError("backend response lacks an embedding");
  CheckEmbedding(*r.embedding);
  return {std::move(r.text), std::move(*r.embedding)};
}

std::vector<double> Gateway::EmbedText(std::string_view text) {
  CompletionResult r = Fetch(Capability::kEmbedText, text);
  if (!r.embedding) throw TransportError("backend response lacks an embedding");
  CheckEmbedding(*r.embedding);
  return std::move(*r.embedding);
}

GatewayStats Gateway::stats() const {
  GatewayStats s;
  s.backend_calls = backend_calls_.load();
  s.cache_hits = cache_hits_.load();
  s.retries = retries_.load();
  s.max_in_flight_observed = max_in_flight_observed_.load();
  return s;
}

}  // namespace wsre::llm
