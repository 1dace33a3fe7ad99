#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>

#include "difbench/corpus.hpp"
#include "difbench/model_client.hpp"
#include "difbench/persona.hpp"

namespace difbench {

// Deterministic fake backend. It recognizes rendered system/user prompts,
// maps them back to (persona, question), and answers per the configured
// behavior — by default, always the gold answer.
struct MockBehavior {
    std::string model_name = "mock-model";
    std::uint64_t seed = 0;

    // Probability that a (persona, question) cell answers wrong. The per-cell
    // decision is a keyed hash of (seed, persona, question), so it is stable
    // across calls, sample indices, and reruns.
    double default_flip_probability = 0.0;
    std::map<std::string, double> flip_probability_by_persona;  // persona id -> p

    // Questions a persona always gets wrong, regardless of probabilities.
    std::map<std::string, std::set<std::string>> flip_questions_by_persona;

    // Exact raw responses per (persona id, question id), one per sample index.
    // Overrides everything else for that cell.
    std::map<std::pair<std::string, std::string>, std::array<std::string, 3>>
        scripted_responses;

    // Artificial per-call latency; lets tests observe the parallelism bound.
    int latency_ms = 0;
};

class MockChatModel : public ChatBackend {
public:
    MockChatModel(const Corpus& corpus, const PersonaSet& personas, MockBehavior behavior);

    std::string complete(const ChatRequest& request) override;
    const std::string& model_name() const override { return behavior_.model_name; }

    // true iff the keyed coin for this cell comes up "wrong" under p.
    static bool flip_decision(std::uint64_t seed, const std::string& persona_id,
                              const std::string& question_id, double p);

    std::string gold_response(const Question& question) const;
    std::string wrong_response(const Question& question) const;

    int calls() const { return calls_.load(); }
    int max_in_flight() const { return max_in_flight_.load(); }
    void reset_counters();

private:
    MockBehavior behavior_;
    Corpus corpus_;
    std::unordered_map<std::string, std::string> persona_by_system_prompt_;
    std::unordered_map<std::string, std::size_t> question_by_user_prompt_;
    std::atomic<int> calls_{0};
    std::atomic<int> in_flight_{0};
    std::atomic<int> max_in_flight_{0};
};

}  // namespace difbench
