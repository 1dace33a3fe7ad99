#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace difbench {

// Rewrite an upstream dataset dump as normalized question JSONL.
// Supported upstream layouts (one JSON object per line):
//   gsmmc    {"Question", "A", "B", "C", "D", "Answer"}
//   mathqa   {"Problem", "options": "a ) 38 , b ) 27 , ...", "correct": "a"}
//   deepmath {"question", "final_answer", "difficulty"}
// Extra upstream fields are ignored.
void convert_dataset(const std::string& upstream, const std::filesystem::path& in,
                     const std::filesystem::path& out);

// "a ) 38 , b ) 27 , c ) 14" -> {(A,"38"), (B,"27"), (C,"14")}. Markers must
// appear in alphabetical order; text between markers is trimmed of spaces and
// separator commas.
std::vector<std::pair<char, std::string>> parse_mathqa_options(const std::string& s);

}  // namespace difbench
