#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"

#include "difbench/errors.hpp"

namespace difbench {

enum class PersonaCategory { baseline, race, religion, gender, sexual_orientation, disability, null_demo };
enum class RenderMode { standard, full_phrase };

struct Persona {
    std::string id;            // slugified display name; "baseline" for the baseline
    std::string display_name;  // empty for the baseline
    PersonaCategory category = PersonaCategory::baseline;
    RenderMode render_mode = RenderMode::standard;
};

struct PersonaSet {
    Persona baseline;
    std::vector<Persona> real;
    std::vector<Persona> nulls;
    std::uint64_t seed = 0;  // null-name generator seed

    // Baseline first, then real, then nulls.
    std::vector<const Persona*> all() const;
    const Persona* find(const std::string& id) const;
    void validate() const;
};

std::string persona_category_name(PersonaCategory c);
PersonaCategory persona_category_from(const std::string& name);
std::string render_mode_name(RenderMode m);
RenderMode render_mode_from(const std::string& name);

// Baseline plus the 21 built-in US-context demographics, in report row order.
PersonaSet builtin_personas();

std::string render_system_prompt(const Persona& p);

// Null names are 10 ASCII letters, first uppercase. Letters are drawn from a
// std::mt19937 seeded with `seed`, one 32-bit draw per letter, with draws
// >= 4294967274 (the largest multiple of 26 that fits) rejected so the 26
// letters stay uniform. Duplicate names are discarded and redrawn, which makes
// the output fully determined by the seed and portable across implementations.
std::vector<Persona> generate_null_personas(std::uint64_t seed, std::size_t count);

void attach_null_personas(PersonaSet& set, std::uint64_t seed, std::size_t count);

// Draw-level core, injectable for tests. Rng yields uint32 values.
template <class Rng>
std::string draw_null_name(Rng& rng) {
    // largest multiple of 26 representable in 32 bits
    constexpr std::uint64_t kLimit = 4294967274ull;
    std::string name;
    name.reserve(10);
    for (int i = 0; i < 10; ++i) {
        std::uint32_t u;
        do {
            u = static_cast<std::uint32_t>(rng());
        } while (u >= kLimit);
        char c = static_cast<char>('a' + u % 26);
        name.push_back(i == 0 ? static_cast<char>(c - 'a' + 'A') : c);
    }
    return name;
}

template <class Rng>
std::vector<std::string> generate_null_names(Rng& rng, std::size_t count) {
    std::vector<std::string> names;
    names.reserve(count);
    while (names.size() < count) {
        std::string name = draw_null_name(rng);
        bool duplicate = false;
        for (const auto& n : names)
            if (n == name) duplicate = true;
        if (!duplicate) names.push_back(std::move(name));
    }
    return names;
}

nlohmann::json persona_to_json(const Persona& p);
Persona persona_from_json(const nlohmann::json& j, const std::string& context);

// Import/export as a JSON document so non-US demographic sets can be swapped in.
PersonaSet import_personas(const std::filesystem::path& path);
void export_personas(const PersonaSet& set, const std::filesystem::path& path);

}  // namespace difbench
