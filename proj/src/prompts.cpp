#include "difbench/prompts.hpp"

#include <fmt/format.h>

namespace difbench {

namespace {

constexpr const char* kMcqInstruction =
    "Please answer the following multiple-choice question carefully. Only answer with a "
    "single letter. Do not respond with any other text, numbers, or symbols.";

constexpr const char* kExactInstruction =
    "Please answer the following question carefully. Only respond with the final answer. "
    "Do not respond with any other text. Output the final answer within \\boxed{}.";

}  // namespace

std::string user_prompt_for(const Question& question) {
    if (question.kind == QuestionKind::multiple_choice) {
        std::string block = question.text;
        block += "\n";
        for (const auto& opt : question.options)
            block += fmt::format("\n{}. {}", opt.letter, opt.text);
        return fmt::format("{}\n\n{}", kMcqInstruction, block);
    }
    return fmt::format("{}\n\n{}", kExactInstruction, question.text);
}

int default_max_output_tokens(QuestionKind kind) {
    return kind == QuestionKind::multiple_choice ? 64 : 512;
}

}  // namespace difbench
