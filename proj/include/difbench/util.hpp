#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace difbench {

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);

// Lowercase, runs of non-alphanumerics collapsed to single '-', no leading/trailing '-'.
std::string slugify(std::string_view s);

std::string read_file(const std::filesystem::path& path);

// Writes to a sibling temp file, then renames over the target.
void write_file(const std::filesystem::path& path, std::string_view content);

// Current time as "YYYY-MM-DDTHH:MM:SSZ".
std::string now_utc_iso();

// splitmix64; used by the mock backend's keyed flip rule.
std::uint64_t mix64(std::uint64_t x);
std::uint64_t hash64(std::string_view s);

}  // namespace difbench
