#include <array>
#include <utility>

#include "wsre/error.h"
#include "wsre/llm/backends.h"
#include "wsre/llm/gateway.h"

namespace wsre::llm {
namespace {

constexpr std::array<std::pair<Capability, std::string_view>, 4> kCapabilities = {{
    {Capability::kText, "text"},
    {Capability::kYesNoLogits, "yes_no_logits"},
    {Capability::kGenerateEmbedding, "generate_embedding"},
    {Capability::kEmbedText, "embed_text"},
}};

constexpr std::array<std::pair<BackendKind, std::string_view>, 4> kKinds = {{
    {BackendKind::kHttpChat, "http-chat"},
    {BackendKind::kHttpScoring, "http-scoring"},
    {BackendKind::kReplay, "replay"},
    {BackendKind::kStub, "stub"},
}};

}  // namespace

std::string_view CapabilityName(Capability c) {
  for (const auto& [cap, name] : kCapabilities) {
    if (cap == c) return name;
  }
  return "unknown";
}

std::optional<Capability> ParseCapability(std::string_view name) {
  for (const auto& [cap, n] : kCapabilities) {
    if (n == name) return cap;
  }
  return std::nullopt;
}

std::string_view BackendKindName(BackendKind k) {
  for (const auto& [kind, name] : kKinds) {
    if (kind == k) return name;
  }
  return "unknown";
}

std::optional<BackendKind> ParseBackendKind(std::string_view name) {
  for (const auto& [kind, n] : kKinds) {
    if (n == name) return kind;
  }
  return std::nullopt;
}

void ValidateConfig(const BackendConfig& config) {
  if (config.n_hidden <= 0) throw ValidationError("n_hidden must be positive");
  if (config.max_in_flight <= 0) {
    throw ValidationError("max_in_flight must be positive");
  }
  if (config.retry.max_retries < 0) {
    throw ValidationError("retry count must be non-negative");
  }
  if (config.kind == BackendKind::kReplay && !config.cache_path) {
    throw ValidationError("replay backend requires a cache path");
  }
  if ((config.kind == BackendKind::kHttpChat ||
       config.kind == BackendKind::kHttpScoring) &&
      config.endpoint.empty()) {
    throw ValidationError("http backends require an endpoint URL");
  }
}

std::unique_ptr<Backend> MakeBackend(const BackendConfig& config) {
  ValidateConfig(config);
  switch (config.kind) {
    case BackendKind::kHttpChat:
      return std::make_unique<ChatBackend>(config);
    case BackendKind::kHttpScoring:
      return std::make_unique<ScoringBackend>(config);
    case BackendKind::kReplay:
      return std::make_unique<ReplayBackend>();
    case BackendKind::kStub:
      return std::make_unique<StubBackend>(config.seed, config.n_hidden);
  }
  throw ValidationError("unknown backend kind");
}

std::unique_ptr<Gateway> MakeGateway(const BackendConfig& config,
                                     bool text_fallback) {
  auto backend = MakeBackend(config);
  std::shared_ptr<ResponseCache> cache;
  if (config.cache_path) {
    if (config.kind == BackendKind::kReplay &&
        !std::filesystem::exists(*config.cache_path)) {
      throw ValidationError("replay cache " + config.cache_path->string() +
                            " does not exist");
    }
    cache = std::make_shared<ResponseCache>(*config.cache_path);
  }
  Gateway::Options opts;
  opts.model = config.model;
  opts.n_hidden = config.n_hidden;
  opts.max_in_flight = config.max_in_flight;
  opts.retry = config.retry;
  opts.text_fallback = text_fallback;
  if (config.kind == BackendKind::kReplay) {
    opts.cache_kind = config.recorded_kind;
    opts.retry.max_retries = 0;
  }
  return std::make_unique<Gateway>(std::move(backend), std::move(opts),
                                   std::move(cache));
}

}  // namespace wsre::llm
