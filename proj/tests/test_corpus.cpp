#include "doctest.h"

#include "difbench/corpus.hpp"
#include "difbench/errors.hpp"
#include "difbench/util.hpp"
#include "test_util.hpp"

using namespace difbench;

namespace {

const char* kSmallMcq = R"({"id": "q1", "question": "What is 2+3?", "options": [["A", "4"], ["B", "5"], ["C", "6"]], "answer": "B"}
{"id": "q2", "question": "What is 10/2?", "options": [["a", "5"], ["b", "4"]], "answer": "a", "difficulty": 2}
)";

}  // namespace

TEST_CASE("mcq corpus loads with order, casing, and digest") {
    TempDir tmp;
    auto path = tmp.file("small.jsonl", kSmallMcq);
    Corpus c = load_corpus(path, CorpusFormat::mcq_jsonl);

    REQUIRE(c.size() == 2);
    CHECK(c.name == "small");
    CHECK(c.questions[0].id == "q1");
    CHECK(c.questions[1].id == "q2");
    CHECK(c.questions[0].kind == QuestionKind::multiple_choice);
    CHECK(c.questions[0].gold == "B");
    CHECK(c.questions[0].options.size() == 3);
    CHECK(c.questions[0].options[1].text == "5");

    // lowercase letters are normalized on the way in
    CHECK(c.questions[1].options[0].letter == 'A');
    CHECK(c.questions[1].gold == "A");
    CHECK(c.questions[1].difficulty == 2);
    CHECK_FALSE(c.questions[0].difficulty.has_value());

    CHECK(c.source_meta.digest == sha256_hex(kSmallMcq));
    CHECK(c.source_meta.sampling_policy == "all");
    CHECK(c.find("q2") != nullptr);
    CHECK(c.find("nope") == nullptr);
}

TEST_CASE("exact-answer corpus loads and rejects stray options") {
    TempDir tmp;
    auto good = tmp.file("exact.jsonl",
                         R"({"id": "e1", "question": "Compute 7*6.", "answer": "42"}
{"id": "e2", "question": "Simplify 2/4.", "answer": "1/2", "difficulty": 1}
)");
    Corpus c = load_corpus(good, CorpusFormat::exact_jsonl);
    REQUIRE(c.size() == 2);
    CHECK(c.questions[0].kind == QuestionKind::exact_answer);
    CHECK(c.questions[0].options.empty());
    CHECK(c.questions[1].gold == "1/2");

    auto bad = tmp.file("bad.jsonl",
                        R"({"id": "e1", "question": "Q", "answer": "1", "options": [["A", "x"]]}
)");
    CHECK_THROWS_AS(load_corpus(bad, CorpusFormat::exact_jsonl), DataError);
}

TEST_CASE("malformed lines are reported with their line number") {
    TempDir tmp;

    SUBCASE("broken JSON") {
        auto path = tmp.file("broken.jsonl",
                             R"({"id": "q1", "question": "ok?", "options": [["A", "1"], ["B", "2"]], "answer": "A"}
{not json
)");
        CHECK_THROWS_WITH_AS(load_corpus(path, CorpusFormat::mcq_jsonl),
                             doctest::Contains(":2"), DataError);
    }

    SUBCASE("gold letter outside the options") {
        auto path = tmp.file("badgold.jsonl",
                             R"({"id": "q1", "question": "ok?", "options": [["A", "1"], ["B", "2"]], "answer": "A"}
{"id": "q2", "question": "ok?", "options": [["A", "1"], ["B", "2"], ["C", "3"], ["D", "4"]], "answer": "E"}
)");
        CHECK_THROWS_WITH_AS(load_corpus(path, CorpusFormat::mcq_jsonl),
                             doctest::Contains(":2"), DataError);
    }

    SUBCASE("duplicate id") {
        auto path = tmp.file("dup.jsonl",
                             R"({"id": "q1", "question": "a?", "options": [["A", "1"], ["B", "2"]], "answer": "A"}
{"id": "q1", "question": "b?", "options": [["A", "1"], ["B", "2"]], "answer": "B"}
)");
        CHECK_THROWS_WITH_AS(load_corpus(path, CorpusFormat::mcq_jsonl),
                             doctest::Contains("duplicate question id"), DataError);
    }
}

TEST_CASE("missing and empty corpus files fail loudly") {
    TempDir tmp;
    CHECK_THROWS_AS(load_corpus(tmp.path / "nope.jsonl", CorpusFormat::mcq_jsonl), DataError);
    auto empty = tmp.file("empty.jsonl", "\n\n");
    CHECK_THROWS_WITH_AS(load_corpus(empty, CorpusFormat::mcq_jsonl),
                         doctest::Contains("empty corpus"), DataError);
}

TEST_CASE("question invariants") {
    Question q;
    q.id = "x";
    q.text = "t";
    q.kind = QuestionKind::multiple_choice;
    q.options = {{'A', "1"}, {'B', "2"}};
    q.gold = "A";
    CHECK_NOTHROW(validate_question(q));

    SUBCASE("one option is not a choice") {
        q.options = {{'A', "1"}};
        CHECK_THROWS_AS(validate_question(q), DataError);
    }
    SUBCASE("duplicate letters") {
        q.options = {{'A', "1"}, {'A', "2"}};
        CHECK_THROWS_AS(validate_question(q), DataError);
    }
    SUBCASE("negative difficulty") {
        q.difficulty = -1;
        CHECK_THROWS_AS(validate_question(q), DataError);
    }
    SUBCASE("multi-character gold") {
        q.gold = "AB";
        CHECK_THROWS_AS(validate_question(q), DataError);
    }
}

TEST_CASE("sample_first_n truncates in order and records shortfalls") {
    TempDir tmp;
    std::string lines;
    for (int i = 0; i < 5; ++i)
        lines += R"({"id": "q)" + std::to_string(i) +
                 R"(", "question": "n?", "options": [["A", "1"], ["B", "2"]], "answer": "A"})" +
                 "\n";
    Corpus c = load_corpus(tmp.file("five.jsonl", lines), CorpusFormat::mcq_jsonl);

    Corpus three = sample_first_n(c, 3);
    REQUIRE(three.size() == 3);
    CHECK(three.questions[0].id == "q0");
    CHECK(three.questions[2].id == "q2");
    CHECK(three.source_meta.shortfalls.empty());
    CHECK(three.source_meta.sampling_policy == "first_n(n=3)");
    // digest still identifies the source file, not the sample
    CHECK(three.source_meta.digest == c.source_meta.digest);

    Corpus twenty = sample_first_n(c, 20);
    CHECK(twenty.size() == 5);
    REQUIRE(twenty.source_meta.shortfalls.size() == 1);
    CHECK(twenty.source_meta.shortfalls[0] ==
          "requested 20 questions, corpus has only 5");

    CHECK_THROWS_AS(sample_first_n(c, 0), ConfigError);
}

TEST_CASE("sample_per_difficulty takes per-level prefixes in ascending level order") {
    TempDir tmp;
    // interleave levels 1..3 so prefix-taking is observable
    std::string lines;
    int levels[] = {3, 1, 2, 1, 3, 2, 1, 2};
    for (int i = 0; i < 8; ++i)
        lines += R"({"id": "q)" + std::to_string(i) +
                 R"(", "question": "n?", "answer": "7", "difficulty": )" +
                 std::to_string(levels[i]) + "}\n";
    Corpus c = load_corpus(tmp.file("lv.jsonl", lines), CorpusFormat::exact_jsonl);

    Corpus sampled = sample_per_difficulty(c, 1, 3, 2);
    REQUIRE(sampled.size() == 6);
    // level 1 first (q1, q3), then level 2 (q2, q5), then level 3 (q0, q4)
    CHECK(sampled.questions[0].id == "q1");
    CHECK(sampled.questions[1].id == "q3");
    CHECK(sampled.questions[2].id == "q2");
    CHECK(sampled.questions[3].id == "q5");
    CHECK(sampled.questions[4].id == "q0");
    CHECK(sampled.questions[5].id == "q4");
    CHECK(sampled.source_meta.shortfalls.empty());

    // levels 1 and 2 have three questions each, level 3 only two
    Corpus hungry = sample_per_difficulty(c, 1, 3, 3);
    REQUIRE(hungry.source_meta.shortfalls.size() == 1);
    CHECK(hungry.source_meta.shortfalls[0] == "level 3: requested 3, found 2");
    CHECK(hungry.size() == 8);

    CHECK_THROWS_AS(sample_per_difficulty(c, 3, 1, 2), ConfigError);
    CHECK_THROWS_AS(sample_per_difficulty(c, 1, 3, 0), ConfigError);
    CHECK_THROWS_AS(sample_per_difficulty(c, 9, 9, 1), DataError);  // nothing in range
}

TEST_CASE("sample_per_difficulty demands difficulty on every question") {
    TempDir tmp;
    auto path = tmp.file("mixed.jsonl",
                         R"({"id": "q1", "question": "n?", "answer": "7", "difficulty": 1}
{"id": "q2", "question": "n?", "answer": "7"}
)");
    Corpus c = load_corpus(path, CorpusFormat::exact_jsonl);
    CHECK_THROWS_WITH_AS(sample_per_difficulty(c, 1, 2, 1), doctest::Contains("q2"), DataError);
}
