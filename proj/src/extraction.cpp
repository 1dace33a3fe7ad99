#include "difbench/extraction.hpp"

#include <boost/multiprecision/cpp_int.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <optional>
#include <stdexcept>

#include "difbench/errors.hpp"
#include "difbench/util.hpp"

namespace difbench {

using boost::multiprecision::cpp_int;

ExtractedAnswer ExtractedAnswer::failure(std::string raw, std::string reason) {
    ExtractedAnswer a;
    a.kind = AnswerKind::parse_failure;
    a.raw = std::move(raw);
    a.failure_reason = std::move(reason);
    return a;
}

std::string answer_kind_name(AnswerKind k) {
    switch (k) {
        case AnswerKind::letter: return "letter";
        case AnswerKind::expression: return "expression";
        case AnswerKind::parse_failure: return "parse_failure";
    }
    return "?";
}

AnswerKind answer_kind_from(const std::string& name) {
    if (name == "letter") return AnswerKind::letter;
    if (name == "expression") return AnswerKind::expression;
    if (name == "parse_failure") return AnswerKind::parse_failure;
    throw DataError("unknown answer kind: " + name);
}

std::string verdict_reason_name(VerdictReason r) {
    switch (r) {
        case VerdictReason::match: return "match";
        case VerdictReason::mismatch: return "mismatch";
        case VerdictReason::parse_failure: return "parse_failure";
    }
    return "?";
}

VerdictReason verdict_reason_from(const std::string& name) {
    if (name == "match") return VerdictReason::match;
    if (name == "mismatch") return VerdictReason::mismatch;
    if (name == "parse_failure") return VerdictReason::parse_failure;
    throw DataError("unknown verdict reason: " + name);
}

ExtractedAnswer extract_mcq_letter(const std::string& raw, const std::vector<char>& allowed) {
    if (allowed.empty()) throw std::logic_error("extract_mcq_letter: allowed set is empty");
    std::string s = trim(raw);
    if (!s.empty() && (s.back() == '.' || s.back() == ',' || s.back() == ')')) {
        s.pop_back();
        s = trim(s);
    }
    if (s.empty()) return ExtractedAnswer::failure(raw, "empty response");
    if (s.size() != 1) return ExtractedAnswer::failure(raw, "more than a single letter");
    char c = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
    if (std::find(allowed.begin(), allowed.end(), c) == allowed.end())
        return ExtractedAnswer::failure(raw, fmt::format("'{}' is not an option letter", s[0]));
    ExtractedAnswer a;
    a.kind = AnswerKind::letter;
    a.value = std::string(1, c);
    a.raw = raw;
    return a;
}

ExtractedAnswer extract_boxed(const std::string& raw) {
    static const std::string marker = "\\boxed{";
    std::size_t pos = raw.rfind(marker);
    if (pos == std::string::npos) return ExtractedAnswer::failure(raw, "no \\boxed{} marker");
    std::size_t start = pos + marker.size();
    int depth = 1;
    for (std::size_t i = start; i < raw.size(); ++i) {
        if (raw[i] == '{') ++depth;
        if (raw[i] == '}') {
            --depth;
            if (depth == 0) {
                std::string payload = raw.substr(start, i - start);
                if (payload.empty())
                    return ExtractedAnswer::failure(raw, "empty \\boxed{} payload");
                ExtractedAnswer a;
                a.kind = AnswerKind::expression;
                a.value = payload;
                a.raw = raw;
                return a;
            }
        }
    }
    return ExtractedAnswer::failure(raw, "unbalanced braces after \\boxed{");
}

bool answers_match(const ExtractedAnswer& a, const ExtractedAnswer& b) {
    if (a.kind == AnswerKind::parse_failure || b.kind == AnswerKind::parse_failure) return false;
    return a.kind == b.kind && a.value == b.value;
}

std::string normalize_expression(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s)
        if (!std::isspace(static_cast<unsigned char>(c))) out.push_back(c);
    // strip balanced enclosing brace pairs
    while (out.size() >= 2 && out.front() == '{' && out.back() == '}') {
        int depth = 0;
        bool wraps = true;
        for (std::size_t i = 0; i < out.size(); ++i) {
            if (out[i] == '{') ++depth;
            if (out[i] == '}') --depth;
            if (depth == 0 && i + 1 < out.size()) {
                wraps = false;
                break;
            }
        }
        if (!wraps) break;
        out = out.substr(1, out.size() - 2);
    }
    return out;
}

namespace {

struct Rational {
    cpp_int num;
    cpp_int den;  // > 0
};

// integer, decimal, or p/q fraction; nullopt for anything else
std::optional<Rational> parse_rational(const std::string& s) {
    std::size_t i = 0;
    auto parse_signed_decimal = [&]() -> std::optional<Rational> {
        bool neg = false;
        if (i < s.size() && (s[i] == '+' || s[i] == '-')) {
            neg = s[i] == '-';
            ++i;
        }
        std::string digits, frac;
        while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) digits += s[i++];
        if (i < s.size() && s[i] == '.') {
            ++i;
            while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) frac += s[i++];
        }
        if (digits.empty() && frac.empty()) return std::nullopt;
        cpp_int num = digits.empty() ? cpp_int(0) : cpp_int(digits);
        cpp_int den = 1;
        for (char c : frac) {
            num = num * 10 + (c - '0');
            den *= 10;
        }
        if (neg) num = -num;
        return Rational{num, den};
    };

    auto first = parse_signed_decimal();
    if (!first) return std::nullopt;
    if (i == s.size()) return first;
    if (s[i] != '/') return std::nullopt;
    ++i;
    auto second = parse_signed_decimal();
    if (!second || i != s.size()) return std::nullopt;
    if (second->num == 0) return std::nullopt;  // p/0 is not a number
    // (a/b) / (c/d) = a*d / b*c
    Rational r{first->num * second->den, first->den * second->num};
    if (r.den < 0) {
        r.num = -r.num;
        r.den = -r.den;
    }
    return r;
}

}  // namespace

bool numeric_equivalent(const std::string& a, const std::string& b) {
    auto ra = parse_rational(a);
    auto rb = parse_rational(b);
    if (!ra || !rb) return false;
    return ra->num * rb->den == rb->num * ra->den;
}

Verdict grade(const ExtractedAnswer& extracted, const Question& question) {
    if (extracted.kind == AnswerKind::parse_failure)
        return Verdict{false, VerdictReason::parse_failure};
    if (question.kind == QuestionKind::multiple_choice) {
        if (extracted.kind != AnswerKind::letter)
            throw std::logic_error(fmt::format(
                "grade: {} answer graded against multiple-choice question \"{}\"",
                answer_kind_name(extracted.kind), question.id));
        bool ok = extracted.value == question.gold;
        return Verdict{ok, ok ? VerdictReason::match : VerdictReason::mismatch};
    }
    if (extracted.kind != AnswerKind::expression)
        throw std::logic_error(fmt::format(
            "grade: {} answer graded against exact-answer question \"{}\"",
            answer_kind_name(extracted.kind), question.id));
    std::string got = normalize_expression(extracted.value);
    std::string want = normalize_expression(question.gold);
    bool ok = numeric_equivalent(got, want) || got == want;
    return Verdict{ok, ok ? VerdictReason::match : VerdictReason::mismatch};
}

}  // namespace difbench
