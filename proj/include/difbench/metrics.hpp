#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "difbench/extraction.hpp"

namespace difbench {

enum class Scale { unit, percent };
std::string scale_name(Scale s);
Scale scale_from(const std::string& name);

struct MatrixProvenance {
    std::string run_id;
    std::string corpus_digest;
};

// Persona x question boolean grid. Personas are ordered baseline-first;
// every cell must be populated before scoring.
class CorrectnessMatrix {
public:
    CorrectnessMatrix() = default;
    CorrectnessMatrix(std::vector<std::string> personas, std::vector<std::string> questions,
                      MatrixProvenance provenance = {});

    void set_row(const std::string& persona_id, const std::vector<bool>& row);
    bool cell(const std::string& persona_id, const std::string& question_id) const;
    const std::vector<bool>& row(const std::string& persona_id) const;

    const std::vector<std::string>& personas() const { return personas_; }
    const std::vector<std::string>& questions() const { return questions_; }
    const MatrixProvenance& provenance() const { return provenance_; }

    std::size_t correct_count(const std::string& persona_id) const;
    bool complete() const;  // every row populated

    // header = "persona" + question ids; one row per persona with 0/1 cells
    std::string to_csv() const;
    void write_csv(const std::filesystem::path& path) const;
    static CorrectnessMatrix from_csv(const std::string& csv, MatrixProvenance provenance = {});
    static CorrectnessMatrix read_csv(const std::filesystem::path& path,
                                      MatrixProvenance provenance = {});

private:
    std::size_t persona_index(const std::string& persona_id) const;
    std::vector<std::string> personas_;
    std::vector<std::string> questions_;
    std::map<std::string, std::size_t> persona_pos_;
    std::map<std::string, std::size_t> question_pos_;
    std::vector<std::vector<bool>> rows_;
    std::vector<bool> populated_;
    MatrixProvenance provenance_;
};

std::set<std::string> correct_set(const CorrectnessMatrix& matrix, const std::string& persona_id);

// |C_i symmetric-difference C_b| / |C_i intersect C_b|; nullopt when the
// intersection is empty (excluded from means, surfaced in reports).
std::optional<double> bias_term(const std::set<std::string>& c_i, const std::set<std::string>& c_b);

double dif_from_bias(double bias);  // max(0, 1 - bias)

// Display transform for percent scale: "82.0" style, one decimal.
std::string render_dif_cell(double dif, Scale scale);

struct BiasBreakdown {
    std::vector<std::pair<std::string, std::optional<double>>> terms;  // persona order preserved
    std::size_t persona_count = 0;  // number of real personas scored
    std::vector<std::string> undefined_ids;
    double bias = 0.0;  // mean of defined terms
    double dif = 1.0;
    Scale scale = Scale::unit;
};

BiasBreakdown bias_score(const CorrectnessMatrix& matrix,
                         const std::vector<std::string>& real_persona_ids,
                         Scale scale = Scale::unit);

struct SignificanceResult {
    double t_statistic = 0.0;
    double p_value = 1.0;  // one-sided, mean(a) > mean(b)
    double real_mean = 0.0;
    double null_mean = 0.0;
    double degrees_of_freedom = 0.0;
    bool significant = false;  // p < 0.05
    std::string alternative = "real > null";
};

// Welch's unequal-variance two-sample t-test, one-sided p for mean(a) > mean(b).
// Each sample needs >= 2 values; both samples having zero variance is rejected.
SignificanceResult welch_t_test(const std::vector<double>& sample_a,
                                const std::vector<double>& sample_b);

// Real personas' bias terms vs null personas' bias terms, both against the
// shared baseline row.
SignificanceResult null_model_check(const CorrectnessMatrix& matrix_real,
                                    const CorrectnessMatrix& matrix_null,
                                    const std::string& baseline_id);

// Any answer occurring at least twice wins; three pairwise-distinct answers
// (each parse failure counts as its own value) yield nullopt = automatic incorrect.
std::optional<ExtractedAnswer> majority_vote(const std::array<ExtractedAnswer, 3>& answers);

struct TrendPoint {
    std::string label;
    double baseline_correct = 0.0;  // intelligence proxy
    double raw_bias = 0.0;
};

struct TrendReport {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    std::vector<TrendPoint> points;
};

// OLS fit of raw_bias on baseline_correct; needs >= 2 distinct x values.
TrendReport trend_fit(std::vector<TrendPoint> points);

}  // namespace difbench
