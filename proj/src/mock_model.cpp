#include "difbench/mock_model.hpp"

#include <chrono>
#include <thread>

#include <fmt/format.h>

#include "difbench/errors.hpp"
#include "difbench/prompts.hpp"
#include "difbench/util.hpp"

namespace difbench {

MockChatModel::MockChatModel(const Corpus& corpus, const PersonaSet& personas,
                             MockBehavior behavior)
    : behavior_(std::move(behavior)), corpus_(corpus) {
    for (const Persona* p : personas.all())
        persona_by_system_prompt_[render_system_prompt(*p)] = p->id;
    for (std::size_t i = 0; i < corpus_.questions.size(); ++i)
        question_by_user_prompt_[user_prompt_for(corpus_.questions[i])] = i;

    for (const auto& [cell, responses] : behavior_.scripted_responses) {
        (void)responses;
        if (corpus_.find(cell.second) == nullptr)
            throw DataError(fmt::format("mock behavior scripts unknown question '{}'",
                                        cell.second));
    }
    for (const auto& [persona_id, ids] : behavior_.flip_questions_by_persona)
        for (const auto& qid : ids)
            if (corpus_.find(qid) == nullptr)
                throw DataError(fmt::format(
                    "mock behavior flips unknown question '{}' for persona '{}'", qid,
                    persona_id));
}

bool MockChatModel::flip_decision(std::uint64_t seed, const std::string& persona_id,
                                  const std::string& question_id, double p) {
    if (p <= 0.0) return false;
    if (p >= 1.0) return true;
    std::uint64_t h = seed;
    h = mix64(h ^ hash64(persona_id));
    h = mix64(h ^ hash64(question_id));
    double u = static_cast<double>(h >> 11) * 0x1.0p-53;
    return u < p;
}

std::string MockChatModel::gold_response(const Question& question) const {
    if (question.kind == QuestionKind::multiple_choice) return question.gold;
    return fmt::format("\\boxed{{{}}}", question.gold);
}

std::string MockChatModel::wrong_response(const Question& question) const {
    if (question.kind == QuestionKind::multiple_choice) {
        auto letters = question.option_letters();
        for (std::size_t i = 0; i < letters.size(); ++i)
            if (letters[i] == question.gold[0])
                return std::string(1, letters[(i + 1) % letters.size()]);
        return std::string(1, letters.front());
    }
    return fmt::format("\\boxed{{{}+1}}", question.gold);
}

std::string MockChatModel::complete(const ChatRequest& request) {
    request.validate();
    calls_.fetch_add(1);
    int now = in_flight_.fetch_add(1) + 1;
    int seen = max_in_flight_.load();
    while (now > seen && !max_in_flight_.compare_exchange_weak(seen, now)) {
    }
    if (behavior_.latency_ms > 0)
        std::this_thread::sleep_for(std::chrono::milliseconds(behavior_.latency_ms));
    struct Guard {
        std::atomic<int>& counter;
        ~Guard() { counter.fetch_sub(1); }
    } guard{in_flight_};

    auto persona_it = persona_by_system_prompt_.find(request.system_prompt);
    if (persona_it == persona_by_system_prompt_.end())
        throw DataError(fmt::format("mock model got an unrecognized system prompt: \"{}\"",
                                    request.system_prompt));
    auto question_it = question_by_user_prompt_.find(request.user_prompt);
    if (question_it == question_by_user_prompt_.end())
        throw DataError("mock model got an unrecognized user prompt");

    const std::string& persona_id = persona_it->second;
    const Question& question = corpus_.questions[question_it->second];

    if (auto it = behavior_.scripted_responses.find({persona_id, question.id});
        it != behavior_.scripted_responses.end())
        return it->second[static_cast<std::size_t>(request.sample_index)];

    if (auto it = behavior_.flip_questions_by_persona.find(persona_id);
        it != behavior_.flip_questions_by_persona.end() && it->second.count(question.id))
        return wrong_response(question);

    double p = behavior_.default_flip_probability;
    if (auto it = behavior_.flip_probability_by_persona.find(persona_id);
        it != behavior_.flip_probability_by_persona.end())
        p = it->second;
    if (flip_decision(behavior_.seed, persona_id, question.id, p))
        return wrong_response(question);

    return gold_response(question);
}

void MockChatModel::reset_counters() {
    calls_.store(0);
    in_flight_.store(0);
    max_in_flight_.store(0);
}

}  // namespace difbench
