#include "difbench/converters.hpp"

#include <cctype>
#include <functional>

#include <fmt/format.h>

#include "json.hpp"

#include "difbench/errors.hpp"
#include "difbench/util.hpp"

namespace difbench {

using nlohmann::json;

std::vector<std::pair<char, std::string>> parse_mathqa_options(const std::string& s) {
    struct Marker {
        std::size_t start;
        std::size_t end;  // one past ')'
    };
    std::vector<Marker> markers;
    char expected = 'a';
    std::size_t i = 0;
    while (i < s.size() && expected <= 'e') {
        if (s[i] == expected) {
            bool boundary = i == 0 || s[i - 1] == ' ' || s[i - 1] == ',';
            std::size_t j = i + 1;
            while (j < s.size() && s[j] == ' ') ++j;
            if (boundary && j < s.size() && s[j] == ')') {
                markers.push_back({i, j + 1});
                ++expected;
                i = j + 1;
                continue;
            }
        }
        ++i;
    }
    if (markers.size() < 2)
        throw DataError(fmt::format("cannot parse options string \"{}\"", s));

    std::vector<std::pair<char, std::string>> out;
    for (std::size_t k = 0; k < markers.size(); ++k) {
        std::size_t start = markers[k].end;
        std::size_t stop = k + 1 < markers.size() ? markers[k + 1].start : s.size();
        std::string text = trim(std::string_view(s).substr(start, stop - start));
        while (!text.empty() && text.back() == ',') text = trim(text.substr(0, text.size() - 1));
        if (text.empty())
            throw DataError(fmt::format("option {} is empty in \"{}\"",
                                        static_cast<char>('a' + k), s));
        out.emplace_back(static_cast<char>('A' + k), std::move(text));
    }
    return out;
}

namespace {

void for_each_line(const std::filesystem::path& path,
                   const std::function<void(std::size_t, const json&)>& fn) {
    std::string content = read_file(path);
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < content.size()) {
        std::size_t end = content.find('\n', pos);
        if (end == std::string::npos) end = content.size();
        ++line_no;
        std::string_view line(content.data() + pos, end - pos);
        pos = end + 1;
        if (trim(line).empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw DataError(fmt::format("{}:{}: malformed JSON ({})", path.string(), line_no,
                                        e.what()));
        }
        fn(line_no, j);
    }
}

const json& need(const json& j, const char* field, const std::filesystem::path& path,
                 std::size_t line_no) {
    if (!j.contains(field))
        throw DataError(fmt::format("{}:{}: missing \"{}\"", path.string(), line_no, field));
    return j[field];
}

std::string convert_gsmmc(const std::filesystem::path& in) {
    std::string out;
    std::size_t index = 0;
    for_each_line(in, [&](std::size_t line_no, const json& j) {
        json options = json::array();
        for (const char* letter : {"A", "B", "C", "D"})
            options.push_back(json::array(
                {letter, need(j, letter, in, line_no).get<std::string>()}));
        std::string answer = need(j, "Answer", in, line_no).get<std::string>();
        if (answer.size() == 1) answer[0] = static_cast<char>(std::toupper(
            static_cast<unsigned char>(answer[0])));
        json rec{{"id", fmt::format("gsmmc-{:05d}", index)},
                 {"question", need(j, "Question", in, line_no).get<std::string>()},
                 {"options", options},
                 {"answer", answer}};
        out += rec.dump();
        out += '\n';
        ++index;
    });
    return out;
}

std::string convert_mathqa(const std::filesystem::path& in) {
    std::string out;
    std::size_t index = 0;
    for_each_line(in, [&](std::size_t line_no, const json& j) {
        auto parsed = parse_mathqa_options(need(j, "options", in, line_no).get<std::string>());
        json options = json::array();
        for (const auto& [letter, text] : parsed)
            options.push_back(json::array({std::string(1, letter), text}));
        std::string correct = need(j, "correct", in, line_no).get<std::string>();
        if (correct.size() != 1)
            throw DataError(fmt::format("{}:{}: correct answer \"{}\" is not a single letter",
                                        in.string(), line_no, correct));
        char answer = static_cast<char>(std::toupper(static_cast<unsigned char>(correct[0])));
        json rec{{"id", fmt::format("mathqa-{:05d}", index)},
                 {"question", need(j, "Problem", in, line_no).get<std::string>()},
                 {"options", options},
                 {"answer", std::string(1, answer)}};
        out += rec.dump();
        out += '\n';
        ++index;
    });
    return out;
}

std::string convert_deepmath(const std::filesystem::path& in) {
    std::string out;
    std::size_t index = 0;
    for_each_line(in, [&](std::size_t line_no, const json& j) {
        const json& difficulty = need(j, "difficulty", in, line_no);
        if (!difficulty.is_number_integer() || difficulty.get<long long>() < 0)
            throw DataError(fmt::format("{}:{}: difficulty must be a nonnegative integer",
                                        in.string(), line_no));
        json rec{{"id", fmt::format("deepmath-{:05d}", index)},
                 {"question", need(j, "question", in, line_no).get<std::string>()},
                 {"answer", need(j, "final_answer", in, line_no).get<std::string>()},
                 {"difficulty", difficulty.get<long long>()}};
        out += rec.dump();
        out += '\n';
        ++index;
    });
    return out;
}

}  // namespace

void convert_dataset(const std::string& upstream, const std::filesystem::path& in,
                     const std::filesystem::path& out) {
    std::string converted;
    if (upstream == "gsmmc")
        converted = convert_gsmmc(in);
    else if (upstream == "mathqa")
        converted = convert_mathqa(in);
    else if (upstream == "deepmath")
        converted = convert_deepmath(in);
    else
        throw ConfigError(fmt::format(
            "unknown upstream format \"{}\" (expected gsmmc, mathqa, or deepmath)", upstream));
    if (converted.empty()) throw DataError(fmt::format("{} has no records", in.string()));
    write_file(out, converted);
}

}  // namespace difbench
