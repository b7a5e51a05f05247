#ifndef WSRE_LLM_CACHE_H_
#define WSRE_LLM_CACHE_H_

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "wsre/llm/backend.h"

namespace wsre::llm {

struct CacheKey {
  std::string backend_kind;
  std::string model;
  Capability capability = Capability::kText;
  std::string prompt;

  std::uint64_t Hash() const;
  friend bool operator==(const CacheKey&, const CacheKey&) = default;
};

nlohmann::json ResultToJson(const CompletionResult& r);
CompletionResult ResultFromJson(const nlohmann::json& j);

// Response cache keyed by a 64-bit hash; hits are verified against the full
// key text. With a file attached, entries persist as append-only JSON lines
//   {"key", "backend", "model", "capability", "prompt", "result", "created_at"}
// and are reloaded on open. Safe for concurrent use.
class ResponseCache {
 public:
  // In-memory only.
  ResponseCache() = default;
  // Loads existing lines (if the file exists) and appends new entries.
  explicit ResponseCache(std::filesystem::path path);

  ResponseCache(const ResponseCache&) = delete;
  ResponseCache& operator=(const ResponseCache&) = delete;

  std::optional<CompletionResult> Lookup(const CacheKey& key) const;
  void Store(const CacheKey& key, const CompletionResult& result);

  std::size_t size() const;
  const std::optional<std::filesystem::path>& path() const { return path_; }

 private:
  struct Entry {
    CacheKey key;
    CompletionResult result;
  };
  void Insert(CacheKey key, CompletionResult result);

  mutable std::mutex mu_;
  std::unordered_map<std::uint64_t, std::vector<Entry>> entries_;
  std::size_t count_ = 0;
  std::optional<std::filesystem::path> path_;
  std::ofstream out_;
};

}  // namespace wsre::llm

#endif  // WSRE_LLM_CACHE_H_
