#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace difbench {

enum class QuestionKind { multiple_choice, exact_answer };

struct Option {
    char letter;  // uppercase
    std::string text;
};

struct Question {
    std::string id;
    std::string text;
    QuestionKind kind = QuestionKind::multiple_choice;
    std::vector<Option> options;  // present iff multiple_choice
    std::string gold;             // option letter, or canonical expression
    std::optional<int> difficulty;

    std::vector<char> option_letters() const;
};

// Throws DataError when an invariant is violated; `context` prefixes the message.
void validate_question(const Question& q, const std::string& context = {});

struct SourceMeta {
    std::string path;
    std::string digest;  // sha256 of the raw file bytes, lowercase hex
    std::string sampling_policy = "all";
    std::vector<std::string> shortfalls;
};

struct Corpus {
    std::string name;
    std::vector<Question> questions;
    SourceMeta source_meta;

    const Question* find(const std::string& id) const;
    std::size_t size() const { return questions.size(); }
};

enum class CorpusFormat { mcq_jsonl, exact_jsonl };

std::string corpus_format_name(CorpusFormat f);
CorpusFormat corpus_format_from(const std::string& name);

// One JSON object per line: {id, question, options?, answer, difficulty?}.
// options is an ordered array of [letter, text] pairs.
Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format);

// First min(n, |corpus|) questions in original order. n = 0 is rejected.
Corpus sample_first_n(const Corpus& corpus, std::size_t n);

// For each level in [level_min, level_max], the first min(per_level, available)
// questions of that level in corpus order, concatenated by ascending level.
Corpus sample_per_difficulty(const Corpus& corpus, int level_min, int level_max,
                             std::size_t per_level);

}  // namespace difbench
