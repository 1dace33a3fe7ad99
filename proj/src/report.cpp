#include <fmt/format.h>

#include "difbench/runner.hpp"

namespace difbench {

using nlohmann::json;

namespace {

json persona_row_json(const PersonaReportRow& row, bool with_term) {
    json j{{"id", row.id},
           {"display_name", row.display_name},
           {"category", row.category},
           {"correct", row.correct},
           {"parse_failure_rate", row.parse_failure_rate}};
    if (with_term) j["bias_term"] = row.bias_term ? json(*row.bias_term) : json(nullptr);
    return j;
}

std::string term_cell(const std::optional<double>& term) {
    return term ? fmt::format("{:.6f}", *term) : std::string("-");
}

}  // namespace

json RunReport::to_json() const {
    json doc;
    doc["run_id"] = run_id;
    doc["model"] = model_name;
    doc["corpus"] = json{{"name", corpus_name}, {"digest", corpus_digest}, {"size", corpus_size}};
    doc["sampling"] = json{{"mode", sampling_mode_name(sampling.mode)},
                           {"temperature", sampling.temperature},
                           {"samples_per_question", sampling.samples_per_question},
                           {"max_output_tokens", sampling.max_output_tokens}};
    doc["null_seed"] = null_seed;
    doc["baseline"] = persona_row_json(baseline, false);
    doc["personas"] = json::array();
    for (const auto& row : real) doc["personas"].push_back(persona_row_json(row, true));
    doc["null_personas"] = json::array();
    for (const auto& row : nulls) doc["null_personas"].push_back(persona_row_json(row, true));
    doc["bias"] = json{{"mean", breakdown.bias},
                       {"dif", breakdown.dif},
                       {"defined_terms", breakdown.terms.size() - breakdown.undefined_ids.size()},
                       {"persona_count", breakdown.persona_count},
                       {"undefined_persona_ids", breakdown.undefined_ids}};
    doc["scale"] = "unit";  // machine output stays in [0,1]; rendering applies display scale
    if (significance) {
        doc["significance"] = json{{"t", significance->t_statistic},
                                   {"df", significance->degrees_of_freedom},
                                   {"p", significance->p_value},
                                   {"real_mean", significance->real_mean},
                                   {"null_mean", significance->null_mean},
                                   {"significant", significance->significant},
                                   {"alternative", significance->alternative}};
    } else {
        doc["significance"] = nullptr;
    }
    doc["significance_note"] = significance_note;
    return doc;
}

std::string RunReport::render_text() const {
    std::string out;
    auto line = [&out](std::string&& s) {
        out += s;
        out += '\n';
    };

    line("DIF benchmark report");
    line("====================");
    line(fmt::format("run:      {}", run_id));
    line(fmt::format("model:    {}", model_name));
    line(fmt::format("corpus:   {} - {} questions, sha256 {}", corpus_name, corpus_size,
                     corpus_digest.substr(0, 12)));
    if (sampling.mode == SamplingMode::greedy)
        line("sampling: greedy (1 sample/question)");
    else
        line(fmt::format("sampling: temperature {:g} ({} samples/question, majority vote)",
                         sampling.temperature, sampling.samples_per_question));
    line(fmt::format("personas: {} real, {} null (seed {})", real.size(), nulls.size(),
                     null_seed));
    line("");

    const bool starred = significance && significance->significant;
    line("Score");
    line("-----");
    line(fmt::format("DIF:  {}{}  ({} scale{})", render_dif_cell(breakdown.dif, scale),
                     starred ? "*" : "", scale_name(scale),
                     starred ? "; * = significant vs null personas" : ""));
    std::size_t defined = breakdown.terms.size() - breakdown.undefined_ids.size();
    line(fmt::format("bias: {:.6f}, mean of {} defined terms out of {}", breakdown.bias,
                     defined, breakdown.terms.size()));
    if (breakdown.undefined_ids.empty()) {
        line("undefined terms: none");
    } else {
        std::string ids;
        for (const auto& id : breakdown.undefined_ids) {
            if (!ids.empty()) ids += ", ";
            ids += id;
        }
        line(fmt::format("undefined terms (empty overlap with baseline, excluded): {}", ids));
    }
    line("");

    line("Null-model check");
    line("----------------");
    if (significance) {
        line(fmt::format("real-term mean {:.6f} vs null-term mean {:.6f}",
                         significance->real_mean, significance->null_mean));
        line(fmt::format("Welch t = {:.4f}, df = {:.2f}, one-sided p = {:.6g} -> {} at a = 0.05",
                         significance->t_statistic, significance->degrees_of_freedom,
                         significance->p_value,
                         significance->significant ? "significant" : "not significant"));
    } else {
        line(fmt::format("unavailable: {}", significance_note));
    }
    line("");

    line(fmt::format("Correct answers by persona (out of {})", corpus_size));
    line("---------------------------------------");
    line(fmt::format("{:<20} {:<24} {:>7} {:>11} {:>11}", "category", "persona", "correct",
                     "parse-fail", "bias-term"));
    line(fmt::format("{:<20} {:<24} {:>7} {:>10.1f}% {:>11}", baseline.category, "(baseline)",
                     baseline.correct, baseline.parse_failure_rate * 100.0, "-"));
    for (const auto& row : real)
        line(fmt::format("{:<20} {:<24} {:>7} {:>10.1f}% {:>11}", row.category,
                         row.display_name, row.correct, row.parse_failure_rate * 100.0,
                         term_cell(row.bias_term)));
    line("");

    if (!nulls.empty()) {
        line(fmt::format("Null personas (out of {})", corpus_size));
        line("--------------------------");
        line(fmt::format("{:<24} {:>7} {:>11} {:>11}", "persona", "correct", "parse-fail",
                         "bias-term"));
        for (const auto& row : nulls)
            line(fmt::format("{:<24} {:>7} {:>10.1f}% {:>11}", row.display_name, row.correct,
                             row.parse_failure_rate * 100.0, term_cell(row.bias_term)));
        line("");
    }
    return out;
}

json trend_to_json(const TrendReport& trend) {
    json doc;
    doc["slope"] = trend.slope;
    doc["intercept"] = trend.intercept;
    doc["r_squared"] = trend.r_squared;
    doc["points"] = json::array();
    for (const auto& p : trend.points)
        doc["points"].push_back(json{{"label", p.label},
                                     {"baseline_correct", p.baseline_correct},
                                     {"raw_bias", p.raw_bias}});
    return doc;
}

}  // namespace difbench
