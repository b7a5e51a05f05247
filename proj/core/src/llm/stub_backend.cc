#include <cmath>

#include "wsre/llm/backends.h"
#include "wsre/util/hash.h"
#include "wsre/util/random.h"

namespace wsre::llm {

StubBackend::StubBackend(std::uint64_t seed, int n_hidden)
    : seed_(seed), n_hidden_(n_hidden) {}

std::vector<double> StubBackend::UnitVector(std::uint64_t key, int n_hidden) {
  Rng rng(key);
  std::vector<double> v(static_cast<std::size_t>(n_hidden));
  double norm2 = 0.0;
  for (double& x : v) {
    x = rng.Normal();
    norm2 += x * x;
  }
  const double norm = std::sqrt(norm2);
  for (double& x : v) x /= norm;
  return v;
}

BackendResponse StubBackend::Call(Capability c, std::string_view prompt) {
  const std::uint64_t key =
      MixSeed(seed_, HashFields({CapabilityName(c), prompt}));
  BackendResponse r;
  switch (c) {
    case Capability::kText:
      r.text = "stub summary " + HexDigest(key) + ".";
      break;
    case Capability::kYesNoLogits: {
      Rng rng(key);
      r.yes_logit = rng.Uniform(-3.0, 3.0);
      r.no_logit = 0.0;
      r.text = *r.yes_logit >= 0.0 ? "yes" : "no";
      break;
    }
    case Capability::kGenerateEmbedding:
      r.text = "stub answer " + HexDigest(key) + ".";
      r.embedding = UnitVector(key, n_hidden_);
      break;
    case Capability::kEmbedText:
      r.embedding = UnitVector(key, n_hidden_);
      break;
  }
  return r;
}

}  // namespace wsre::llm
