#include "wsre/llm/cache.h"

#include <chrono>
#include <ctime>

#include "wsre/corpus.h"
#include "wsre/error.h"
#include "wsre/util/hash.h"

namespace wsre::llm {
namespace {

using nlohmann::json;

std::string UtcTimestamp() {
  const std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

std::uint64_t CacheKey::Hash() const {
  return HashFields({backend_kind, model, CapabilityName(capability), prompt});
}

json ResultToJson(const CompletionResult& r) {
  json j;
  j["text"] = r.text;
  j["yes_logit"] = r.yes_logit ? json(*r.yes_logit) : json(nullptr);
  j["no_logit"] = r.no_logit ? json(*r.no_logit) : json(nullptr);
  j["embedding"] = r.embedding ? json(*r.embedding) : json(nullptr);
  return j;
}

CompletionResult ResultFromJson(const json& j) {
  CompletionResult r;
  r.text = j.value("text", "");
  if (j.contains("yes_logit") && !j["yes_logit"].is_null()) {
    r.yes_logit = j["yes_logit"].get<double>();
  }
  if (j.contains("no_logit") && !j["no_logit"].is_null()) {
    r.no_logit = j["no_logit"].get<double>();
  }
  if (j.contains("embedding") && !j["embedding"].is_null()) {
    r.embedding = j["embedding"].get<std::vector<double>>();
  }
  return r;
}

ResponseCache::ResponseCache(std::filesystem::path path) : path_(path) {
  if (std::filesystem::exists(path)) {
    const std::string text = corpus::ReadFile(path);
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start < text.size()) {
      std::size_t end = text.find('\n', start);
      if (end == std::string::npos) end = text.size();
      ++line_no;
      const std::string_view line(text.data() + start, end - start);
      start = end + 1;
      if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
      try {
        const json j = json::parse(line);
        CacheKey key;
        key.backend_kind = j.at("backend").get<std::string>();
        key.model = j.at("model").get<std::string>();
        const auto cap = ParseCapability(j.at("capability").get<std::string>());
        if (!cap) throw ParseError("unknown capability");
        key.capability = *cap;
        key.prompt = j.at("prompt").get<std::string>();
        Insert(std::move(key), ResultFromJson(j.at("result")));
      } catch (const std::exception& e) {
        throw ParseError(path.string() + ":" + std::to_string(line_no) +
                         ": bad cache line: " + e.what());
      }
    }
  } else if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  out_.open(path, std::ios::app | std::ios::binary);
  if (!out_) throw ValidationError("cannot open cache file " + path.string());
}

void ResponseCache::Insert(CacheKey key, CompletionResult result) {
  auto& bucket = entries_[key.Hash()];
  for (auto& e : bucket) {
    if (e.key == key) {
      e.result = std::move(result);
      return;
    }
  }
  bucket.push_back({std::move(key), std::move(result)});
  ++count_;
}

std::optional<CompletionResult> ResponseCache::Lookup(const CacheKey& key) const {
  std::lock_guard lock(mu_);
  auto it = entries_.find(key.Hash());
  if (it == entries_.end()) return std::nullopt;
  for (const auto& e : it->second) {
    if (e.key == key) return e.result;
  }
  return std::nullopt;
}

void ResponseCache::Store(const CacheKey& key, const CompletionResult& result) {
  std::lock_guard lock(mu_);
  Insert(key, result);
  if (out_.is_open()) {
    json line;
    line["key"] = HexDigest(key.Hash());
    line["backend"] = key.backend_kind;
    line["model"] = key.model;
    line["capability"] = CapabilityName(key.capability);
    line["prompt"] = key.prompt;
    line["result"] = ResultToJson(result);
    line["created_at"] = UtcTimestamp();
    out_ << line.dump() << '\n';
    out_.flush();
  }
}

std::size_t ResponseCache::size() const {
  std::lock_guard lock(mu_);
  return count_;
}

}  // namespace wsre::llm
