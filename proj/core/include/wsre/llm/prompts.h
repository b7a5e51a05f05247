#ifndef WSRE_LLM_PROMPTS_H_
#define WSRE_LLM_PROMPTS_H_

#include <string>
#include <string_view>
#include <vector>

namespace wsre::llm {

// Entity-oriented summarization request: the instruction line, a newline,
// then the document text.
std::string SummarizePrompt(std::string_view document_text,
                            std::string_view entity_name);

// Head summary + ' ' + tail summary. Empty sides are dropped.
std::string BuildContext(std::string_view head_summary,
                         std::string_view tail_summary);

// Replaces {head} and {tail} with the quoted entity names.
std::string FillTemplate(std::string_view question_template,
                         std::string_view head, std::string_view tail);

// Filled question (trailing '?' removed) + ' ' + context + " ?". This is the
// shape shared by every scoring prompt:
//   Is "Pacific Fair" located in ... "Queensland" <context> ?
std::string ScoringPrompt(std::string_view question_template,
                          std::string_view head, std::string_view tail,
                          std::string_view context);

std::string OpenEndedPrompt(std::string_view head, std::string_view tail,
                            std::string_view context);

// The three relation-existence phrasings used as separate weak sources.
const std::vector<std::string>& DefaultExistenceParaphrases();

}  // namespace wsre::llm

#endif  // WSRE_LLM_PROMPTS_H_
