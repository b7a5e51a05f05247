#include <cstdlib>

#include <httplib.h>

#include "wsre/error.h"
#include "wsre/llm/backends.h"

namespace wsre::llm {
namespace {

using nlohmann::json;

std::string ApiKey(const BackendConfig& config) {
  if (config.api_key_env.empty()) return {};
  const char* v = std::getenv(config.api_key_env.c_str());
  return v ? v : "";
}

json PostJson(const HttpTarget& target, const BackendConfig& config,
              const std::string& api_key, const json& body) {
  httplib::Client client(target.scheme_host_port);
  const auto secs = config.timeout.count() / 1000;
  const auto usecs = (config.timeout.count() % 1000) * 1000;
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);

  httplib::Headers headers;
  if (!api_key.empty()) headers.emplace("Authorization", "Bearer " + api_key);

  auto res = client.Post(target.path, headers, body.dump(), "application/json");
  if (!res) {
    throw TransportError("POST " + target.scheme_host_port + target.path +
                         " failed: " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw TransportError("POST " + target.scheme_host_port + target.path +
                         " returned HTTP " + std::to_string(res->status));
  }
  try {
    return json::parse(res->body);
  } catch (const json::parse_error& e) {
    throw TransportError(std::string("unparseable backend response: ") + e.what());
  }
}

}  // namespace

HttpTarget SplitUrl(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw ValidationError("endpoint must be an absolute http(s) URL: " + url);
  }
  const std::string scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") {
    throw ValidationError("unsupported URL scheme '" + scheme + "'");
  }
  const auto path_start = url.find('/', scheme_end + 3);
  HttpTarget t;
  if (path_start == std::string::npos) {
    t.scheme_host_port = url;
    t.path = "/";
  } else {
    t.scheme_host_port = url.substr(0, path_start);
    t.path = url.substr(path_start);
  }
  if (t.scheme_host_port.size() == scheme_end + 3) {
    throw ValidationError("endpoint has no host: " + url);
  }
  return t;
}

ChatBackend::ChatBackend(const BackendConfig& config)
    : config_(config), target_(SplitUrl(config.endpoint)), api_key_(ApiKey(config)) {}

json ChatBackend::RequestBody(std::string_view prompt) const {
  json body;
  body["model"] = config_.model;
  body["messages"] = json::array({{{"role", "user"}, {"content", prompt}}});
  if (config_.temperature) body["temperature"] = *config_.temperature;
  return body;
}

BackendResponse ChatBackend::ParseResponse(const json& body) {
  try {
    BackendResponse r;
    r.text = body.at("choices").at(0).at("message").at("content").get<std::string>();
    return r;
  } catch (const json::exception& e) {
    throw TransportError(std::string("malformed chat response: ") + e.what());
  }
}

BackendResponse ChatBackend::Call(Capability c, std::string_view prompt) {
  if (c != Capability::kText) {
    throw CapabilityError("http-chat backend only generates text");
  }
  return ParseResponse(PostJson(target_, config_, api_key_, RequestBody(prompt)));
}

ScoringBackend::ScoringBackend(const BackendConfig& config)
    : config_(config), target_(SplitUrl(config.endpoint)), api_key_(ApiKey(config)) {}

json ScoringBackend::RequestBody(Capability c, std::string_view prompt) const {
  json body;
  body["model"] = config_.model;
  body["prompt"] = prompt;
  switch (c) {
    case Capability::kText:
      body["want"] = {"text"};
      break;
    case Capability::kYesNoLogits:
      body["want"] = {"yes_no_logits"};
      break;
    case Capability::kGenerateEmbedding:
      body["want"] = {"text", "embedding"};
      break;
    case Capability::kEmbedText:
      body["want"] = {"embedding"};
      body["embed_input"] = true;
      break;
  }
  if (config_.temperature) body["temperature"] = *config_.temperature;
  return body;
}

BackendResponse ScoringBackend::ParseResponse(const json& body) {
  try {
    BackendResponse r;
    if (body.contains("text") && body["text"].is_string()) {
      r.text = body["text"].get<std::string>();
    }
    if (body.contains("yes_logit") && !body["yes_logit"].is_null()) {
      r.yes_logit = body["yes_logit"].get<double>();
    }
    if (body.contains("no_logit") && !body["no_logit"].is_null()) {
      r.no_logit = body["no_logit"].get<double>();
    }
    if (body.contains("token_embeddings") && !body["token_embeddings"].is_null()) {
      r.token_embeddings =
          body["token_embeddings"].get<std::vector<std::vector<double>>>();
    }
    if (body.contains("embedding") && !body["embedding"].is_null()) {
      r.embedding = body["embedding"].get<std::vector<double>>();
    }
    return r;
  } catch (const json::exception& e) {
    throw TransportError(std::string("malformed scoring response: ") + e.what());
  }
}

BackendResponse ScoringBackend::Call(Capability c, std::string_view prompt) {
  return ParseResponse(PostJson(target_, config_, api_key_, RequestBody(c, prompt)));
}

}  // namespace wsre::llm
