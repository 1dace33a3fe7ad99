#include "difbench/corpus.hpp"

#include <fmt/format.h>

#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"

#include "difbench/errors.hpp"
#include "difbench/util.hpp"

namespace difbench {

using nlohmann::json;

std::vector<char> Question::option_letters() const {
    std::vector<char> letters;
    letters.reserve(options.size());
    for (const auto& o : options) letters.push_back(o.letter);
    return letters;
}

void validate_question(const Question& q, const std::string& context) {
    auto fail = [&](const std::string& what) {
        throw DataError(context.empty() ? what : context + ": " + what);
    };
    if (q.id.empty()) fail("question id is empty");
    if (q.text.empty()) fail("question text is empty");
    if (q.difficulty && *q.difficulty < 0) fail("difficulty must be a nonnegative integer");
    if (q.kind == QuestionKind::multiple_choice) {
        if (q.options.size() < 2) fail("multiple-choice question needs at least 2 options");
        std::set<char> seen;
        for (const auto& o : q.options) {
            if (o.letter < 'A' || o.letter > 'Z') fail("option letter must be A-Z");
            if (!seen.insert(o.letter).second)
                fail(fmt::format("duplicate option letter '{}'", o.letter));
        }
        if (q.gold.size() != 1 || !seen.count(q.gold[0]))
            fail(fmt::format("gold answer '{}' is not among the option letters", q.gold));
    } else {
        if (!q.options.empty()) fail("exact-answer question must not carry options");
        if (q.gold.empty()) fail("exact-answer question needs a nonempty gold answer");
    }
}

const Question* Corpus::find(const std::string& id) const {
    for (const auto& q : questions)
        if (q.id == id) return &q;
    return nullptr;
}

std::string corpus_format_name(CorpusFormat f) {
    return f == CorpusFormat::mcq_jsonl ? "mcq_jsonl" : "exact_jsonl";
}

CorpusFormat corpus_format_from(const std::string& name) {
    if (name == "mcq_jsonl") return CorpusFormat::mcq_jsonl;
    if (name == "exact_jsonl") return CorpusFormat::exact_jsonl;
    throw ConfigError("unknown corpus format: " + name + " (expected mcq_jsonl or exact_jsonl)");
}

namespace {

Question parse_question_line(const json& rec, CorpusFormat format, const std::string& context) {
    auto fail = [&](const std::string& what) { throw DataError(context + ": " + what); };
    if (!rec.is_object()) fail("record is not a JSON object");
    Question q;
    if (!rec.contains("id") || !rec["id"].is_string()) fail("missing string field \"id\"");
    q.id = rec["id"].get<std::string>();
    if (!rec.contains("question") || !rec["question"].is_string())
        fail("missing string field \"question\"");
    q.text = rec["question"].get<std::string>();
    if (!rec.contains("answer") || !rec["answer"].is_string())
        fail("missing string field \"answer\"");
    q.gold = rec["answer"].get<std::string>();
    if (rec.contains("difficulty")) {
        if (!rec["difficulty"].is_number_integer()) fail("\"difficulty\" must be an integer");
        q.difficulty = rec["difficulty"].get<int>();
    }
    if (format == CorpusFormat::mcq_jsonl) {
        q.kind = QuestionKind::multiple_choice;
        if (!rec.contains("options") || !rec["options"].is_array())
            fail("missing array field \"options\"");
        for (const auto& pair : rec["options"]) {
            if (!pair.is_array() || pair.size() != 2 || !pair[0].is_string() ||
                !pair[1].is_string())
                fail("each option must be a [letter, text] pair");
            std::string letter = pair[0].get<std::string>();
            if (letter.size() != 1) fail("option letter must be a single character");
            q.options.push_back(
                {static_cast<char>(std::toupper(static_cast<unsigned char>(letter[0]))),
                 pair[1].get<std::string>()});
        }
        if (q.gold.size() == 1)
            q.gold[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(q.gold[0])));
    } else {
        q.kind = QuestionKind::exact_answer;
        if (rec.contains("options") && !rec["options"].empty())
            fail("exact-answer record must not carry options");
    }
    validate_question(q, context);
    return q;
}

}  // namespace

Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format) {
    if (!std::filesystem::exists(path)) throw DataError("corpus file not found: " + path.string());
    std::string bytes = read_file(path);

    Corpus corpus;
    corpus.name = path.stem().string();
    corpus.source_meta.path = path.string();
    corpus.source_meta.digest = sha256_hex(bytes);
    corpus.source_meta.sampling_policy = "all";

    std::set<std::string> ids;
    std::istringstream in(bytes);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        std::string context = fmt::format("{}:{}", path.string(), line_no);
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::parse_error& e) {
            throw DataError(fmt::format("{}: malformed JSON ({})", context, e.what()));
        }
        Question q = parse_question_line(rec, format, context);
        if (!ids.insert(q.id).second)
            throw DataError(fmt::format("{}: duplicate question id \"{}\"", context, q.id));
        corpus.questions.push_back(std::move(q));
    }
    if (corpus.questions.empty()) throw DataError("empty corpus: " + path.string());
    return corpus;
}

Corpus sample_first_n(const Corpus& corpus, std::size_t n) {
    if (n == 0) throw ConfigError("sample_first_n: n must be at least 1");
    Corpus out;
    out.name = corpus.name;
    out.source_meta = corpus.source_meta;
    std::size_t take = std::min(n, corpus.questions.size());
    out.questions.assign(corpus.questions.begin(),
                         corpus.questions.begin() + static_cast<std::ptrdiff_t>(take));
    out.source_meta.sampling_policy = fmt::format("first_n(n={})", n);
    if (take < n)
        out.source_meta.shortfalls.push_back(
            fmt::format("requested {} questions, corpus has only {}", n, take));
    for (std::size_t i = 0; i < out.questions.size(); ++i)
        validate_question(out.questions[i], fmt::format("sampled question #{}", i));
    return out;
}

Corpus sample_per_difficulty(const Corpus& corpus, int level_min, int level_max,
                             std::size_t per_level) {
    if (per_level == 0) throw ConfigError("sample_per_difficulty: per_level must be at least 1");
    if (level_min > level_max)
        throw ConfigError(fmt::format("sample_per_difficulty: empty level range [{}, {}]",
                                      level_min, level_max));
    for (const auto& q : corpus.questions)
        if (!q.difficulty)
            throw DataError(fmt::format(
                "sample_per_difficulty: question \"{}\" has no difficulty level", q.id));

    Corpus out;
    out.name = corpus.name;
    out.source_meta = corpus.source_meta;
    out.source_meta.sampling_policy = fmt::format("per_difficulty(levels={}..{}, per_level={})",
                                                  level_min, level_max, per_level);
    for (int level = level_min; level <= level_max; ++level) {
        std::size_t taken = 0;
        for (const auto& q : corpus.questions) {
            if (*q.difficulty != level) continue;
            if (taken == per_level) break;
            out.questions.push_back(q);
            ++taken;
        }
        if (taken < per_level)
            out.source_meta.shortfalls.push_back(
                fmt::format("level {}: requested {}, found {}", level, per_level, taken));
    }
    if (out.questions.empty())
        throw DataError(fmt::format("sample_per_difficulty: no questions in levels {}..{}",
                                    level_min, level_max));
    for (std::size_t i = 0; i < out.questions.size(); ++i)
        validate_question(out.questions[i], fmt::format("sampled question #{}", i));
    return out;
}

}  // namespace difbench
