#include "wsre/corpus.h"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "wsre/error.h"

namespace wsre::corpus {
namespace {

using nlohmann::json;

[[noreturn]] void Malformed(std::size_t doc, const std::string& what) {
  throw ParseError("document " + std::to_string(doc) + ": " + what);
}

const json& Field(const json& obj, const char* key, std::size_t doc) {
  auto it = obj.find(key);
  if (it == obj.end()) Malformed(doc, std::string("missing field '") + key + "'");
  return *it;
}

int AsInt(const json& v, std::size_t doc, const char* what) {
  if (!v.is_number_integer()) Malformed(doc, std::string(what) + " must be an integer");
  return v.get<int>();
}

std::string AsString(const json& v, std::size_t doc, const char* what) {
  if (!v.is_string()) Malformed(doc, std::string(what) + " must be a string");
  return v.get<std::string>();
}

Document ParseDocument(const json& obj, std::size_t index,
                       std::vector<GoldLabel>* gold) {
  if (!obj.is_object()) Malformed(index, "expected a JSON object");
  Document doc;
  doc.index = index;
  doc.title = AsString(Field(obj, "title", index), index, "title");

  const json& sents = Field(obj, "sents", index);
  if (!sents.is_array()) Malformed(index, "'sents' must be an array");
  for (const json& sent : sents) {
    if (!sent.is_array()) Malformed(index, "each sentence must be a token array");
    auto& tokens = doc.sentences.emplace_back();
    for (const json& tok : sent) tokens.push_back(AsString(tok, index, "token"));
  }

  const json& vertex_set = Field(obj, "vertexSet", index);
  if (!vertex_set.is_array()) Malformed(index, "'vertexSet' must be an array");
  for (std::size_t e = 0; e < vertex_set.size(); ++e) {
    const json& cluster = vertex_set[e];
    if (!cluster.is_array()) Malformed(index, "vertexSet entries must be arrays");
    Entity entity;
    entity.id = static_cast<int>(e);
    for (const json& m : cluster) {
      if (!m.is_object()) Malformed(index, "mentions must be objects");
      Mention mention;
      mention.surface = AsString(Field(m, "name", index), index, "mention name");
      mention.sent_index = AsInt(Field(m, "sent_id", index), index, "sent_id");
      const json& pos = Field(m, "pos", index);
      if (!pos.is_array() || pos.size() != 2) {
        Malformed(index, "mention 'pos' must be [start, end]");
      }
      mention.start = AsInt(pos[0], index, "pos[0]");
      mention.end = AsInt(pos[1], index, "pos[1]");
      if (entity.mentions.empty()) {
        entity.type = AsString(Field(m, "type", index), index, "mention type");
      }

      const auto where = "document " + std::to_string(index) + " ('" +
                         doc.title + "'), entity " + std::to_string(e);
      if (mention.sent_index < 0 ||
          static_cast<std::size_t>(mention.sent_index) >= doc.sentences.size()) {
        throw ValidationError(where + ": sentence index " +
                              std::to_string(mention.sent_index) +
                              " out of range");
      }
      const auto sent_len =
          static_cast<int>(doc.sentences[mention.sent_index].size());
      if (mention.start < 0 || mention.start >= mention.end ||
          mention.end > sent_len) {
        throw ValidationError(where + ": token span [" +
                              std::to_string(mention.start) + ", " +
                              std::to_string(mention.end) +
                              ") does not fit sentence of length " +
                              std::to_string(sent_len));
      }
      entity.mentions.push_back(std::move(mention));
    }
    if (entity.mentions.empty()) {
      throw ValidationError("document " + std::to_string(index) + ", entity " +
                            std::to_string(e) + ": no mentions");
    }
    doc.entities.push_back(std::move(entity));
  }

  if (auto labels = obj.find("labels"); labels != obj.end()) {
    if (!labels->is_array()) Malformed(index, "'labels' must be an array");
    const int n = static_cast<int>(doc.entities.size());
    for (const json& l : *labels) {
      GoldLabel g;
      g.doc_index = index;
      g.head = AsInt(Field(l, "h", index), index, "label h");
      g.tail = AsInt(Field(l, "t", index), index, "label t");
      g.relation_id = AsString(Field(l, "r", index), index, "label r");
      if (auto ev = l.find("evidence"); ev != l.end()) {
        for (const json& s : *ev) g.evidence.push_back(AsInt(s, index, "evidence"));
      }
      if (g.head < 0 || g.head >= n || g.tail < 0 || g.tail >= n) {
        throw ValidationError("document " + std::to_string(index) +
                              ": label references a missing entity");
      }
      if (g.head == g.tail) {
        throw ValidationError("document " + std::to_string(index) +
                              ": label with head == tail");
      }
      gold->push_back(std::move(g));
    }
  }
  return doc;
}

}  // namespace

std::string Document::Text() const {
  std::string out;
  for (const auto& sent : sentences) {
    for (const auto& tok : sent) {
      if (!out.empty()) out += ' ';
      out += tok;
    }
  }
  return out;
}

std::vector<const GoldLabel*> Corpus::GoldFor(std::size_t doc_index) const {
  std::vector<const GoldLabel*> out;
  for (const auto& g : gold) {
    if (g.doc_index == doc_index) out.push_back(&g);
  }
  return out;
}

RelationSchema::RelationSchema(std::vector<Relation> relations,
                               std::vector<std::string> entity_types)
    : relations_(std::move(relations)), entity_types_(std::move(entity_types)) {
  std::set<std::string> seen;
  for (const auto& r : relations_) {
    if (!seen.insert(r.id).second) {
      throw ValidationError("duplicate relation id '" + r.id + "'");
    }
  }
}

std::optional<std::size_t> RelationSchema::IndexOf(
    std::string_view relation_id) const {
  for (std::size_t i = 0; i < relations_.size(); ++i) {
    if (relations_[i].id == relation_id) return i;
  }
  return std::nullopt;
}

bool RelationSchema::HasEntityType(std::string_view type) const {
  return std::find(entity_types_.begin(), entity_types_.end(), type) !=
         entity_types_.end();
}

const std::vector<std::string>& DefaultEntityTypes() {
  static const std::vector<std::string> kTypes = {"PER",  "LOC", "ORG",
                                                  "TIME", "NUM", "MISC"};
  return kTypes;
}

std::string DefaultQuestionTemplate(std::string_view relation_name) {
  return "Is {head} " + std::string(relation_name) + " {tail}?";
}

Corpus ParseCorpus(const nlohmann::json& root) {
  if (!root.is_array()) throw ParseError("corpus root must be a JSON array");
  Corpus corpus;
  corpus.documents.reserve(root.size());
  for (std::size_t i = 0; i < root.size(); ++i) {
    corpus.documents.push_back(ParseDocument(root[i], i, &corpus.gold));
  }
  return corpus;
}

std::string ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Corpus LoadCorpus(const std::filesystem::path& path) {
  const std::string text = ReadFile(path);
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return ParseCorpus(root);
}

nlohmann::json CorpusToJson(const Corpus& corpus) {
  json out = json::array();
  for (const auto& doc : corpus.documents) {
    json d;
    d["title"] = doc.title;
    d["sents"] = doc.sentences;
    json vertex_set = json::array();
    for (const auto& e : doc.entities) {
      json cluster = json::array();
      for (const auto& m : e.mentions) {
        cluster.push_back({{"name", m.surface},
                           {"type", e.type},
                           {"sent_id", m.sent_index},
                           {"pos", {m.start, m.end}}});
      }
      vertex_set.push_back(std::move(cluster));
    }
    d["vertexSet"] = std::move(vertex_set);
    json labels = json::array();
    for (const GoldLabel* g : corpus.GoldFor(doc.index)) {
      labels.push_back({{"h", g->head},
                        {"t", g->tail},
                        {"r", g->relation_id},
                        {"evidence", g->evidence}});
    }
    d["labels"] = std::move(labels);
    out.push_back(std::move(d));
  }
  return out;
}

std::vector<EntityPair> EnumeratePairs(const Document& doc) {
  std::vector<EntityPair> pairs;
  const auto n = doc.entities.size();
  if (n < 2) return pairs;
  pairs.reserve(n * (n - 1));
  for (std::size_t h = 0; h < n; ++h) {
    for (std::size_t t = 0; t < n; ++t) {
      if (h == t) continue;
      pairs.push_back({doc.index, static_cast<int>(h), static_cast<int>(t),
                       doc.entities[h].type, doc.entities[t].type});
    }
  }
  return pairs;
}

std::vector<EntityPair> EnumerateCorpusPairs(const Corpus& corpus) {
  std::vector<EntityPair> all;
  for (const auto& doc : corpus.documents) {
    auto pairs = EnumeratePairs(doc);
    all.insert(all.end(), std::make_move_iterator(pairs.begin()),
               std::make_move_iterator(pairs.end()));
  }
  return all;
}

RelationSchema ParseSchema(std::string_view json_text) {
  using ordered = nlohmann::ordered_json;
  // The DOM silently keeps the last of duplicate keys, so duplicates are
  // caught while parsing. Relation ids live at depth 1 (flat form) or at
  // depth 2 under "relations" (extended form).
  std::vector<std::set<std::string>> keys_at_depth;
  std::string duplicate;
  std::vector<std::string> path;
  auto cb = [&](int depth, ordered::parse_event_t event, ordered& parsed) {
    switch (event) {
      case ordered::parse_event_t::object_start:
        keys_at_depth.emplace_back();
        path.emplace_back();
        break;
      case ordered::parse_event_t::object_end:
        keys_at_depth.pop_back();
        path.pop_back();
        break;
      case ordered::parse_event_t::key: {
        const auto key = parsed.get<std::string>();
        const bool relation_level =
            depth == 1 || (depth == 2 && path.size() >= 2 &&
                           path[path.size() - 2] == "relations");
        if (relation_level && !keys_at_depth.back().insert(key).second &&
            duplicate.empty()) {
          duplicate = key;
        }
        path.back() = key;
        break;
      }
      default:
        break;
    }
    return true;
  };

  ordered root;
  try {
    root = ordered::parse(json_text.begin(), json_text.end(), cb);
  } catch (const ordered::parse_error& e) {
    throw ParseError(std::string("relation schema: ") + e.what());
  }
  if (!duplicate.empty()) {
    throw ValidationError("duplicate relation id '" + duplicate + "'");
  }
  if (!root.is_object()) throw ParseError("relation schema must be a JSON object");

  const bool extended = root.contains("relations") && root["relations"].is_object();
  const ordered& rels = extended ? root["relations"] : root;
  std::vector<std::string> types = DefaultEntityTypes();
  if (extended && root.contains("entity_types")) {
    types = root["entity_types"].get<std::vector<std::string>>();
  }

  std::vector<Relation> relations;
  for (const auto& [id, value] : rels.items()) {
    Relation r;
    r.id = id;
    if (value.is_string()) {
      r.name = value.get<std::string>();
    } else if (value.is_object() && value.contains("name")) {
      r.name = value["name"].get<std::string>();
      if (value.contains("template")) {
        r.question_template = value["template"].get<std::string>();
      }
    } else {
      throw ParseError("relation '" + id + "' must map to a name or {name, template}");
    }
    if (r.question_template.empty()) {
      r.question_template = DefaultQuestionTemplate(r.name);
    }
    relations.push_back(std::move(r));
  }
  return RelationSchema(std::move(relations), std::move(types));
}

RelationSchema LoadSchema(const std::filesystem::path& path) {
  return ParseSchema(ReadFile(path));
}

}  // namespace wsre::corpus
