#ifndef WSRE_CORPUS_H_
#define WSRE_CORPUS_H_

// DocRED / Re-DocRED corpora, the relation schema, and ordered entity-pair
// enumeration.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace wsre::corpus {

struct Mention {
  std::string surface;
  int sent_index = 0;
  // Half-open token span [start, end) within the sentence.
  int start = 0;
  int end = 0;
};

struct Entity {
  int id = 0;
  std::string type;
  std::vector<Mention> mentions;

  // Surface form used in prompts: the first mention.
  const std::string& Name() const { return mentions.front().surface; }
};

struct Document {
  // Position in the corpus file. Authoritative identifier; titles are not
  // guaranteed unique.
  std::size_t index = 0;
  std::string title;
  std::vector<std::vector<std::string>> sentences;
  std::vector<Entity> entities;

  // Tokens joined by single spaces, sentences likewise.
  std::string Text() const;
};

struct GoldLabel {
  std::size_t doc_index = 0;
  int head = 0;
  int tail = 0;
  std::string relation_id;
  std::vector<int> evidence;
};

struct Corpus {
  std::vector<Document> documents;
  std::vector<GoldLabel> gold;

  // Gold labels of one document, in file order.
  std::vector<const GoldLabel*> GoldFor(std::size_t doc_index) const;
};

struct Relation {
  std::string id;    // Wikidata P-code, e.g. "P131"
  std::string name;  // "located in the administrative territorial entity"
  std::string question_template;  // contains {head} and {tail}
};

// Positive relation classes in stable order. The NA class is implicit and
// never listed.
class RelationSchema {
 public:
  RelationSchema() = default;
  RelationSchema(std::vector<Relation> relations,
                 std::vector<std::string> entity_types);

  const std::vector<Relation>& relations() const { return relations_; }
  const std::vector<std::string>& entity_types() const {
    return entity_types_;
  }
  std::size_t size() const { return relations_.size(); }
  bool empty() const { return relations_.empty(); }
  const Relation& operator[](std::size_t i) const { return relations_[i]; }

  std::optional<std::size_t> IndexOf(std::string_view relation_id) const;
  bool HasEntityType(std::string_view type) const;

 private:
  std::vector<Relation> relations_;
  std::vector<std::string> entity_types_;
};

// The six DocRED entity types.
const std::vector<std::string>& DefaultEntityTypes();

// "Is {head} <name> {tail}?"
std::string DefaultQuestionTemplate(std::string_view relation_name);

struct EntityPair {
  std::size_t doc_index = 0;
  int head = 0;
  int tail = 0;
  std::string head_type;
  std::string tail_type;

  friend bool operator==(const EntityPair&, const EntityPair&) = default;
};

// DocRED-format JSON array. Throws ParseError for malformed input (the
// message names the document index) and ValidationError for spans that do
// not fit their sentence.
Corpus ParseCorpus(const nlohmann::json& root);
Corpus LoadCorpus(const std::filesystem::path& path);

// Inverse of ParseCorpus for the modeled fields.
nlohmann::json CorpusToJson(const Corpus& corpus);

// All n(n-1) ordered pairs, ascending by head then tail.
std::vector<EntityPair> EnumeratePairs(const Document& doc);

// Pairs for every document, concatenated in document order.
std::vector<EntityPair> EnumerateCorpusPairs(const Corpus& corpus);

// Accepts either the flat rel_info map {"P131": "name", ...} or the
// extended form
//   {"relations": {"P131": {"name": ..., "template": ...}, ...},
//    "entity_types": ["PER", ...]}.
// Relations keep file order. Duplicate ids throw ValidationError.
RelationSchema ParseSchema(std::string_view json_text);
RelationSchema LoadSchema(const std::filesystem::path& path);

// Reads a whole file; throws ValidationError if it cannot be opened.
std::string ReadFile(const std::filesystem::path& path);

}  // namespace wsre::corpus

#endif  // WSRE_CORPUS_H_
