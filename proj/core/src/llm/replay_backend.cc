#include "wsre/error.h"
#include "wsre/llm/backends.h"

namespace wsre::llm {

BackendResponse ReplayBackend::Call(Capability c, std::string_view prompt) {
  constexpr std::size_t kShown = 80;
  std::string head(prompt.substr(0, kShown));
  if (prompt.size() > kShown) head += "...";
  throw TransportError("replay cache has no " + std::string(CapabilityName(c)) +
                       " entry for prompt: " + head);
}

}  // namespace wsre::llm
