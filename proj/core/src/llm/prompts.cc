#include "wsre/llm/prompts.h"

namespace wsre::llm {
namespace {

void ReplaceAll(std::string& s, std::string_view from, std::string_view to) {
  for (std::size_t pos = s.find(from); pos != std::string::npos;
       pos = s.find(from, pos + to.size())) {
    s.replace(pos, from.size(), to);
  }
}

std::string Quoted(std::string_view name) {
  std::string q;
  q.reserve(name.size() + 2);
  q += '"';
  q += name;
  q += '"';
  return q;
}

}  // namespace

std::string SummarizePrompt(std::string_view document_text,
                            std::string_view entity_name) {
  std::string p = "Based on the given paragraph, summarize the information about ";
  p += Quoted(entity_name);
  p += '\n';
  p += document_text;
  return p;
}

std::string BuildContext(std::string_view head_summary,
                         std::string_view tail_summary) {
  if (head_summary.empty()) return std::string(tail_summary);
  if (tail_summary.empty()) return std::string(head_summary);
  std::string ctx(head_summary);
  ctx += ' ';
  ctx += tail_summary;
  return ctx;
}

std::string FillTemplate(std::string_view question_template,
                         std::string_view head, std::string_view tail) {
  std::string out(question_template);
  ReplaceAll(out, "{head}", Quoted(head));
  ReplaceAll(out, "{tail}", Quoted(tail));
  return out;
}

std::string ScoringPrompt(std::string_view question_template,
                          std::string_view head, std::string_view tail,
                          std::string_view context) {
  std::string q = FillTemplate(question_template, head, tail);
  while (!q.empty() && (q.back() == '?' || q.back() == ' ')) q.pop_back();
  if (!context.empty()) {
    q += ' ';
    q += context;
  }
  q += " ?";
  return q;
}

std::string OpenEndedPrompt(std::string_view head, std::string_view tail,
                            std::string_view context) {
  return ScoringPrompt("What's the relationship between {head} and {tail}",
                       head, tail, context);
}

const std::vector<std::string>& DefaultExistenceParaphrases() {
  static const std::vector<std::string> kParaphrases = {
      "Is there a relationship between {head} and {tail}",
      "Is there a direct relationship between {head} and {tail}",
      "Does {head} have any connection to {tail}",
  };
  return kParaphrases;
}

}  // namespace wsre::llm
