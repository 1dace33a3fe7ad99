#include "doctest.h"

#include <stdexcept>

#include "difbench/extraction.hpp"

using namespace difbench;

namespace {

const std::vector<char> kAbcd{'A', 'B', 'C', 'D'};

Question mcq_question(std::string gold) {
    Question q;
    q.id = "m1";
    q.text = "pick one";
    q.kind = QuestionKind::multiple_choice;
    q.options = {{'A', "1"}, {'B', "2"}, {'C', "3"}, {'D', "4"}};
    q.gold = std::move(gold);
    return q;
}

Question exact_question(std::string gold) {
    Question q;
    q.id = "e1";
    q.text = "compute";
    q.kind = QuestionKind::exact_answer;
    q.gold = std::move(gold);
    return q;
}

}  // namespace

TEST_CASE("mcq extraction accepts a bare letter with light trailing punctuation") {
    auto check_letter = [](const std::string& raw, const std::string& expect) {
        ExtractedAnswer a = extract_mcq_letter(raw, kAbcd);
        REQUIRE(a.kind == AnswerKind::letter);
        CHECK(a.value == expect);
        CHECK(a.raw == raw);
    };
    check_letter("A", "A");
    check_letter(" b.", "B");        // lowercase plus one trailing period
    check_letter("C)", "C");
    check_letter("\n D ,\n", "D");
    check_letter("a", "A");
}

TEST_CASE("mcq extraction rejects everything that is not a single allowed letter") {
    auto check_failure = [](const std::string& raw) {
        ExtractedAnswer a = extract_mcq_letter(raw, kAbcd);
        CHECK(a.kind == AnswerKind::parse_failure);
        CHECK_FALSE(a.failure_reason.empty());
        CHECK(a.raw == raw);
    };
    check_failure("");
    check_failure("   ");
    check_failure(".");              // punctuation alone leaves nothing
    check_failure("AB");
    check_failure("A..");            // only one trailing mark is forgiven
    check_failure("(A)");            // leading punctuation is not
    check_failure("The answer is A");
    check_failure("E");              // not among the options
    check_failure("1");

    CHECK(extract_mcq_letter("E", {'A', 'B', 'C', 'D', 'E'}).kind == AnswerKind::letter);
    CHECK_THROWS_AS(extract_mcq_letter("A", {}), std::logic_error);
}

TEST_CASE("boxed extraction takes the last marker and balances braces") {
    ExtractedAnswer a = extract_boxed("\\boxed{42}");
    REQUIRE(a.kind == AnswerKind::expression);
    CHECK(a.value == "42");

    a = extract_boxed("Thus \\boxed{\\frac{1}{2}}.");
    REQUIRE(a.kind == AnswerKind::expression);
    CHECK(a.value == "\\frac{1}{2}");

    a = extract_boxed("first \\boxed{1} then restated: \\boxed{2}");
    REQUIRE(a.kind == AnswerKind::expression);
    CHECK(a.value == "2");

    a = extract_boxed("\\boxed{{x} + {y}}");
    REQUIRE(a.kind == AnswerKind::expression);
    CHECK(a.value == "{x} + {y}");
}

TEST_CASE("boxed extraction failure modes carry reasons") {
    CHECK(extract_boxed("the answer is 42").kind == AnswerKind::parse_failure);
    CHECK(extract_boxed("\\boxed{42").failure_reason == "unbalanced braces after \\boxed{");
    CHECK(extract_boxed("\\boxed{}").failure_reason == "empty \\boxed{} payload");
    // the empty-payload marker being last still fails even if an earlier one was fine
    CHECK(extract_boxed("\\boxed{9} junk \\boxed{}").kind == AnswerKind::parse_failure);
}

TEST_CASE("boxed extraction round-trips any brace-balanced payload") {
    for (const std::string payload :
         {"42", "-1/2", "\\frac{a}{b}", "{nested {deep {deeper}}}", "x^{2}+1", "a b c",
          "\\sqrt{2}/2", "[0, 1)"}) {
        ExtractedAnswer a = extract_boxed("prefix \\boxed{" + payload + "} suffix");
        REQUIRE(a.kind == AnswerKind::expression);
        CHECK(a.value == payload);
    }
}

TEST_CASE("answer matching never lets parse failures agree") {
    ExtractedAnswer fail1 = ExtractedAnswer::failure("junk", "no letter");
    ExtractedAnswer fail2 = ExtractedAnswer::failure("junk", "no letter");
    CHECK_FALSE(answers_match(fail1, fail2));
    CHECK_FALSE(answers_match(fail1, fail1));

    ExtractedAnswer a = extract_mcq_letter("A", kAbcd);
    ExtractedAnswer a2 = extract_mcq_letter("a.", kAbcd);
    ExtractedAnswer b = extract_mcq_letter("B", kAbcd);
    CHECK(answers_match(a, a2));
    CHECK_FALSE(answers_match(a, b));
    CHECK_FALSE(answers_match(a, fail1));

    // same text, different kinds: a letter is not an expression
    ExtractedAnswer expr = extract_boxed("\\boxed{A}");
    CHECK_FALSE(answers_match(a, expr));
}

TEST_CASE("expression normalization strips whitespace and enclosing braces") {
    CHECK(normalize_expression(" 1 / 2 ") == "1/2");
    CHECK(normalize_expression("{42}") == "42");
    CHECK(normalize_expression("{{x}}") == "x");
    CHECK(normalize_expression("{a}{b}") == "{a}{b}");  // not a single enclosing pair
    CHECK(normalize_expression("x + 1") == "x+1");
    CHECK(normalize_expression("") == "");
}

TEST_CASE("numeric equivalence uses exact rational arithmetic") {
    CHECK(numeric_equivalent("0.5", "1/2"));
    CHECK(numeric_equivalent("-3", "-6/2"));
    CHECK(numeric_equivalent("+2", "2"));
    CHECK(numeric_equivalent("2.50", "5/2"));
    CHECK(numeric_equivalent(".5", "0.5"));
    CHECK(numeric_equivalent("3/-6", "-0.5"));
    CHECK(numeric_equivalent("1.5/3", "0.5"));
    // a float comparison would wave this through
    CHECK_FALSE(numeric_equivalent("1/3", "0.3333333333333333"));
    CHECK_FALSE(numeric_equivalent("abc", "abc"));
    CHECK_FALSE(numeric_equivalent("1/0", "1/0"));
    CHECK_FALSE(numeric_equivalent("1", "2"));
    CHECK_FALSE(numeric_equivalent("1..2", "1.2"));
}

TEST_CASE("grading multiple choice") {
    Question q = mcq_question("A");
    Verdict v = grade(extract_mcq_letter("A", kAbcd), q);
    CHECK(v.correct);
    CHECK(v.reason == VerdictReason::match);

    v = grade(extract_mcq_letter("B", kAbcd), q);
    CHECK_FALSE(v.correct);
    CHECK(v.reason == VerdictReason::mismatch);

    v = grade(extract_mcq_letter("nonsense", kAbcd), q);
    CHECK_FALSE(v.correct);
    CHECK(v.reason == VerdictReason::parse_failure);

    // wiring bug, not a data condition
    CHECK_THROWS_AS(grade(extract_boxed("\\boxed{1}"), q), std::logic_error);
}

TEST_CASE("grading exact answers accepts numeric and normalized-string equality") {
    CHECK(grade(extract_boxed("\\boxed{1/2}"), exact_question("0.5")).correct);
    CHECK(grade(extract_boxed("\\boxed{0.5}"), exact_question("1/2")).correct);
    CHECK(grade(extract_boxed("\\boxed{{42}}"), exact_question("42")).correct);
    CHECK(grade(extract_boxed("\\boxed{x + 1}"), exact_question("x+1")).correct);
    CHECK(grade(extract_boxed("\\boxed{\\frac{1}{2}}"), exact_question("\\frac{1}{2}")).correct);

    CHECK_FALSE(grade(extract_boxed("\\boxed{0.333}"), exact_question("1/3")).correct);
    CHECK_FALSE(grade(extract_boxed("\\boxed{y}"), exact_question("x")).correct);
    CHECK_FALSE(grade(extract_boxed("no marker"), exact_question("1")).correct);
    CHECK_THROWS_AS(grade(extract_mcq_letter("A", kAbcd), exact_question("1")),
                    std::logic_error);
}
