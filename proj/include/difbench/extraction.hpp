#pragma once

#include <string>
#include <vector>

#include "difbench/corpus.hpp"

namespace difbench {

enum class AnswerKind { letter, expression, parse_failure };

struct ExtractedAnswer {
    AnswerKind kind = AnswerKind::parse_failure;
    std::string value;           // single uppercase letter, or normalized-enough expression
    std::string raw;             // original response text
    std::string failure_reason;  // set iff parse_failure

    static ExtractedAnswer failure(std::string raw, std::string reason);
};

enum class VerdictReason { match, mismatch, parse_failure };

struct Verdict {
    bool correct = false;
    VerdictReason reason = VerdictReason::parse_failure;
};

std::string answer_kind_name(AnswerKind k);
AnswerKind answer_kind_from(const std::string& name);
std::string verdict_reason_name(VerdictReason r);
VerdictReason verdict_reason_from(const std::string& name);

// Strict: after trimming whitespace and at most one trailing '.', ',' or ')',
// exactly one character must remain and it must match an allowed letter
// case-insensitively. Anything else is a parse failure.
ExtractedAnswer extract_mcq_letter(const std::string& raw, const std::vector<char>& allowed);

// Returns the brace-balanced payload of the last \boxed{...} marker.
ExtractedAnswer extract_boxed(const std::string& raw);

// Equality test used by grading and majority voting. Parse failures never
// match anything, including other parse failures.
bool answers_match(const ExtractedAnswer& a, const ExtractedAnswer& b);

// Strip all whitespace and enclosing balanced brace pairs.
std::string normalize_expression(const std::string& s);

// True when both sides parse as integer, decimal, or p/q fraction and denote
// the same rational number (exact arithmetic, no floating point).
bool numeric_equivalent(const std::string& a, const std::string& b);

Verdict grade(const ExtractedAnswer& extracted, const Question& question);

}  // namespace difbench
