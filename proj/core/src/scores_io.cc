#include "wsre/scores_io.h"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "wsre/corpus.h"
#include "wsre/error.h"

namespace wsre::scoring {
namespace {

using nlohmann::json;

std::filesystem::path SidecarData(const std::filesystem::path& p) {
  return std::filesystem::path(p.string() + ".emb.bin");
}
std::filesystem::path SidecarHeader(const std::filesystem::path& p) {
  return std::filesystem::path(p.string() + ".emb.json");
}

void PutFloatLE(std::ofstream& out, float f) {
  auto bits = std::bit_cast<std::uint32_t>(f);
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 4);
}

float GetFloatLE(const unsigned char* b) {
  std::uint32_t bits = 0;
  for (int i = 0; i < 4; ++i) bits |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return std::bit_cast<float>(bits);
}

}  // namespace

json ScoresToJson(const PairScores& s) {
  json j;
  j["doc_id"] = s.pair.doc_index;
  j["h"] = s.pair.head;
  j["t"] = s.pair.tail;
  j["head_type"] = s.pair.head_type;
  j["tail_type"] = s.pair.tail_type;
  j["oe_embedding"] = s.oe_embedding;
  j["cos_sims"] = s.cos_sims;
  json re = json::array();
  for (double v : s.re_logits) re.push_back(std::isnan(v) ? json(nullptr) : json(v));
  j["re_logits"] = std::move(re);
  if (!s.sr_logits.empty()) {
    json sr = json::array();
    for (const auto& v : s.sr_logits) sr.push_back(v ? json(*v) : json(nullptr));
    j["sr_logits"] = std::move(sr);
  }
  j["mean_cos"] = s.mean_cos;
  j["mean_sr"] = s.mean_sr ? json(*s.mean_sr) : json(nullptr);
  j["scored"] = s.scored;
  j["flags"] = s.flags;
  return j;
}

PairScores ScoresFromJson(const json& j) {
  PairScores s;
  s.pair.doc_index = j.at("doc_id").get<std::size_t>();
  s.pair.head = j.at("h").get<int>();
  s.pair.tail = j.at("t").get<int>();
  s.pair.head_type = j.value("head_type", "");
  s.pair.tail_type = j.value("tail_type", "");
  if (j.contains("oe_embedding")) {
    s.oe_embedding = j["oe_embedding"].get<std::vector<double>>();
  }
  s.cos_sims = j.at("cos_sims").get<std::vector<double>>();
  for (const auto& v : j.at("re_logits")) {
    s.re_logits.push_back(v.is_null() ? std::numeric_limits<double>::quiet_NaN()
                                      : v.get<double>());
  }
  if (j.contains("sr_logits")) {
    for (const auto& v : j["sr_logits"]) {
      s.sr_logits.push_back(v.is_null() ? std::nullopt
                                        : std::optional<double>(v.get<double>()));
    }
  }
  s.mean_cos = j.value("mean_cos", 0.0);
  if (j.contains("mean_sr") && !j["mean_sr"].is_null()) {
    s.mean_sr = j["mean_sr"].get<double>();
  }
  s.scored = j.value("scored", true);
  if (j.contains("flags")) s.flags = j["flags"].get<std::vector<std::string>>();
  return s;
}

void WriteScores(const std::filesystem::path& path,
                 const std::vector<PairScores>& scores, bool embedding_sidecar) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write " + path.string());

  std::size_t cols = 0;
  if (embedding_sidecar) {
    for (const auto& s : scores) cols = std::max(cols, s.oe_embedding.size());
    std::ofstream bin(SidecarData(path), std::ios::binary | std::ios::trunc);
    if (!bin) throw ValidationError("cannot write " + SidecarData(path).string());
    for (const auto& s : scores) {
      for (std::size_t c = 0; c < cols; ++c) {
        PutFloatLE(bin, c < s.oe_embedding.size()
                            ? static_cast<float>(s.oe_embedding[c])
                            : 0.0f);
      }
    }
    json header = {{"rows", scores.size()},
                   {"cols", cols},
                   {"dtype", "float32"},
                   {"order", "row-major"},
                   {"byte_order", "little"}};
    std::ofstream hdr(SidecarHeader(path), std::ios::binary | std::ios::trunc);
    hdr << header.dump(2) << '\n';
  }

  for (std::size_t i = 0; i < scores.size(); ++i) {
    json j = ScoresToJson(scores[i]);
    if (embedding_sidecar) {
      j.erase("oe_embedding");
      j["oe_row"] = i;
    }
    out << j.dump() << '\n';
  }
}

std::vector<PairScores> ReadScores(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw ValidationError("missing scores file " + path.string());
  }
  const std::string text = corpus::ReadFile(path);

  std::vector<float> sidecar;
  std::size_t cols = 0;
  if (std::filesystem::exists(SidecarHeader(path))) {
    const json header = json::parse(corpus::ReadFile(SidecarHeader(path)));
    cols = header.at("cols").get<std::size_t>();
    const std::size_t rows = header.at("rows").get<std::size_t>();
    if (header.value("dtype", "") != "float32" ||
        header.value("byte_order", "") != "little") {
      throw ParseError("unsupported embedding sidecar encoding");
    }
    const std::string bytes = corpus::ReadFile(SidecarData(path));
    if (bytes.size() != rows * cols * 4) {
      throw ParseError("embedding sidecar size does not match its header");
    }
    sidecar.resize(rows * cols);
    const auto* raw = reinterpret_cast<const unsigned char*>(bytes.data());
    for (std::size_t k = 0; k < sidecar.size(); ++k) {
      sidecar[k] = GetFloatLE(raw + 4 * k);
    }
  }

  std::vector<PairScores> scores;
  std::size_t start = 0;
  std::size_t line_no = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    ++line_no;
    const std::string_view line(text.data() + start, end - start);
    start = end + 1;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      PairScores s = ScoresFromJson(j);
      if (j.contains("oe_row")) {
        const auto row = j["oe_row"].get<std::size_t>();
        if (sidecar.empty() || (row + 1) * cols > sidecar.size()) {
          throw ParseError("oe_row without a matching embedding sidecar");
        }
        s.oe_embedding.assign(sidecar.begin() + static_cast<std::ptrdiff_t>(row * cols),
                              sidecar.begin() + static_cast<std::ptrdiff_t>((row + 1) * cols));
      }
      scores.push_back(std::move(s));
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception& e) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return scores;
}

}  // namespace wsre::scoring
