#pragma once

#include <string>

#include "difbench/corpus.hpp"

namespace difbench {

// User-message text for one question. Multiple-choice questions carry the
// single-letter instruction and an "A. text" line per option; exact-answer
// questions ask for a bare \boxed{} result. The system message (persona) is
// rendered separately — see persona.hpp.
std::string user_prompt_for(const Question& question);

// Default response budgets per question kind.
int default_max_output_tokens(QuestionKind kind);

}  // namespace difbench
