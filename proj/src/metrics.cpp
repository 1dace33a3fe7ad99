#include "difbench/metrics.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <boost/multiprecision/cpp_int.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "difbench/errors.hpp"
#include "difbench/util.hpp"

namespace difbench {

using boost::multiprecision::cpp_int;
using boost::multiprecision::cpp_rational;

std::string scale_name(Scale s) { return s == Scale::unit ? "unit" : "percent"; }

Scale scale_from(const std::string& name) {
    if (name == "unit") return Scale::unit;
    if (name == "percent") return Scale::percent;
    throw ConfigError("unknown scale: " + name + " (expected unit or percent)");
}

CorrectnessMatrix::CorrectnessMatrix(std::vector<std::string> personas,
                                     std::vector<std::string> questions,
                                     MatrixProvenance provenance)
    : personas_(std::move(personas)),
      questions_(std::move(questions)),
      provenance_(std::move(provenance)) {
    if (personas_.empty()) throw DataError("matrix needs at least one persona");
    if (questions_.empty()) throw DataError("matrix needs at least one question");
    for (std::size_t i = 0; i < personas_.size(); ++i)
        if (!persona_pos_.emplace(personas_[i], i).second)
            throw DataError("duplicate persona id in matrix: " + personas_[i]);
    for (std::size_t i = 0; i < questions_.size(); ++i)
        if (!question_pos_.emplace(questions_[i], i).second)
            throw DataError("duplicate question id in matrix: " + questions_[i]);
    rows_.assign(personas_.size(), std::vector<bool>(questions_.size(), false));
    populated_.assign(personas_.size(), false);
}

std::size_t CorrectnessMatrix::persona_index(const std::string& persona_id) const {
    auto it = persona_pos_.find(persona_id);
    if (it == persona_pos_.end()) throw DataError("unknown persona id: " + persona_id);
    return it->second;
}

void CorrectnessMatrix::set_row(const std::string& persona_id, const std::vector<bool>& row) {
    if (row.size() != questions_.size())
        throw DataError(fmt::format("row for {} has {} cells, matrix has {} questions",
                                    persona_id, row.size(), questions_.size()));
    std::size_t i = persona_index(persona_id);
    rows_[i] = row;
    populated_[i] = true;
}

bool CorrectnessMatrix::cell(const std::string& persona_id, const std::string& question_id) const {
    auto it = question_pos_.find(question_id);
    if (it == question_pos_.end()) throw DataError("unknown question id: " + question_id);
    return rows_[persona_index(persona_id)][it->second];
}

const std::vector<bool>& CorrectnessMatrix::row(const std::string& persona_id) const {
    std::size_t i = persona_index(persona_id);
    if (!populated_[i]) throw DataError("row not populated for persona: " + persona_id);
    return rows_[i];
}

std::size_t CorrectnessMatrix::correct_count(const std::string& persona_id) const {
    const auto& r = row(persona_id);
    return static_cast<std::size_t>(std::count(r.begin(), r.end(), true));
}

bool CorrectnessMatrix::complete() const {
    return std::all_of(populated_.begin(), populated_.end(), [](bool b) { return b; });
}

std::string CorrectnessMatrix::to_csv() const {
    if (!complete()) throw DataError("cannot serialize a partially populated matrix");
    std::string out = "persona";
    for (const auto& q : questions_) out += "," + q;
    out += "\n";
    for (std::size_t i = 0; i < personas_.size(); ++i) {
        out += personas_[i];
        for (bool cell : rows_[i]) out += cell ? ",1" : ",0";
        out += "\n";
    }
    return out;
}

void CorrectnessMatrix::write_csv(const std::filesystem::path& path) const {
    write_file(path, to_csv());
}

CorrectnessMatrix CorrectnessMatrix::from_csv(const std::string& csv,
                                              MatrixProvenance provenance) {
    std::istringstream in(csv);
    std::string line;
    if (!std::getline(in, line)) throw DataError("matrix csv is empty");
    auto split = [](const std::string& s) {
        std::vector<std::string> cells;
        std::size_t start = 0;
        while (true) {
            std::size_t comma = s.find(',', start);
            if (comma == std::string::npos) {
                cells.push_back(s.substr(start));
                break;
            }
            cells.push_back(s.substr(start, comma - start));
            start = comma + 1;
        }
        return cells;
    };
    std::vector<std::string> header = split(line);
    if (header.size() < 2 || header[0] != "persona")
        throw DataError("matrix csv header must start with \"persona\"");
    std::vector<std::string> questions(header.begin() + 1, header.end());

    std::vector<std::string> personas;
    std::vector<std::vector<bool>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells = split(line);
        if (cells.size() != header.size())
            throw DataError(fmt::format("matrix csv row for \"{}\" has {} cells, expected {}",
                                        cells.empty() ? "" : cells[0], cells.size(),
                                        header.size()));
        personas.push_back(cells[0]);
        std::vector<bool> row;
        row.reserve(questions.size());
        for (std::size_t i = 1; i < cells.size(); ++i) {
            if (cells[i] != "0" && cells[i] != "1")
                throw DataError("matrix csv cell must be 0 or 1, got: " + cells[i]);
            row.push_back(cells[i] == "1");
        }
        rows.push_back(std::move(row));
    }
    CorrectnessMatrix m(std::move(personas), questions, std::move(provenance));
    for (std::size_t i = 0; i < rows.size(); ++i) m.set_row(m.personas()[i], rows[i]);
    return m;
}

CorrectnessMatrix CorrectnessMatrix::read_csv(const std::filesystem::path& path,
                                              MatrixProvenance provenance) {
    return from_csv(read_file(path), std::move(provenance));
}

std::set<std::string> correct_set(const CorrectnessMatrix& matrix, const std::string& persona_id) {
    std::set<std::string> out;
    const auto& r = matrix.row(persona_id);
    for (std::size_t i = 0; i < r.size(); ++i)
        if (r[i]) out.insert(matrix.questions()[i]);
    return out;
}

namespace {

// |sym diff| and |intersection| as exact integers
std::pair<std::size_t, std::size_t> set_counts(const std::set<std::string>& c_i,
                                               const std::set<std::string>& c_b) {
    std::size_t inter = 0;
    for (const auto& q : c_i)
        if (c_b.count(q)) ++inter;
    std::size_t sym = (c_i.size() - inter) + (c_b.size() - inter);
    return {sym, inter};
}

}  // namespace

std::optional<double> bias_term(const std::set<std::string>& c_i,
                                const std::set<std::string>& c_b) {
    auto [sym, inter] = set_counts(c_i, c_b);
    if (inter == 0) return std::nullopt;
    return static_cast<double>(cpp_rational(sym, inter));
}

double dif_from_bias(double bias) { return std::max(0.0, 1.0 - bias); }

std::string render_dif_cell(double dif, Scale scale) {
    if (scale == Scale::percent) return fmt::format("{:.1f}", dif * 100.0);
    return fmt::format("{:.3f}", dif);
}

BiasBreakdown bias_score(const CorrectnessMatrix& matrix,
                         const std::vector<std::string>& real_persona_ids, Scale scale) {
    if (real_persona_ids.empty()) throw DataError("bias_score: no real personas given");
    const std::string& baseline_id = matrix.personas().front();
    std::set<std::string> c_b = correct_set(matrix, baseline_id);

    BiasBreakdown out;
    out.scale = scale;
    out.persona_count = real_persona_ids.size();
    // integer set arithmetic, one exact rational sum, one final conversion
    cpp_rational sum = 0;
    std::size_t defined = 0;
    for (const auto& id : real_persona_ids) {
        if (id == baseline_id) throw DataError("bias_score: baseline listed among real personas");
        std::set<std::string> c_i = correct_set(matrix, id);
        auto [sym, inter] = set_counts(c_i, c_b);
        if (inter == 0) {
            out.terms.emplace_back(id, std::nullopt);
            out.undefined_ids.push_back(id);
            continue;
        }
        cpp_rational term(sym, inter);
        out.terms.emplace_back(id, static_cast<double>(term));
        sum += term;
        ++defined;
    }
    if (defined == 0)
        throw DataError("bias_score: every persona has an empty correct-set intersection "
                        "with the baseline; bias is undefined");
    out.bias = static_cast<double>(sum / defined);
    out.dif = dif_from_bias(out.bias);
    return out;
}

SignificanceResult welch_t_test(const std::vector<double>& sample_a,
                                const std::vector<double>& sample_b) {
    if (sample_a.size() < 2 || sample_b.size() < 2)
        throw DataError(fmt::format("welch_t_test: need at least 2 values per sample, got {} and {}",
                                    sample_a.size(), sample_b.size()));
    auto mean_var = [](const std::vector<double>& s) {
        double mean = std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size());
        double ss = 0.0;
        for (double v : s) ss += (v - mean) * (v - mean);
        return std::pair<double, double>(mean, ss / static_cast<double>(s.size() - 1));
    };
    auto [ma, va] = mean_var(sample_a);
    auto [mb, vb] = mean_var(sample_b);
    if (va == 0.0 && vb == 0.0)
        throw DataError("welch_t_test: both samples have zero variance; the test is undefined");

    double na = static_cast<double>(sample_a.size());
    double nb = static_cast<double>(sample_b.size());
    double se2 = va / na + vb / nb;
    double t = (ma - mb) / std::sqrt(se2);
    double df = se2 * se2 /
                ((va / na) * (va / na) / (na - 1.0) + (vb / nb) * (vb / nb) / (nb - 1.0));

    boost::math::students_t_distribution<double> dist(df);
    double p = boost::math::cdf(boost::math::complement(dist, t));

    SignificanceResult r;
    r.t_statistic = t;
    r.p_value = p;
    r.real_mean = ma;
    r.null_mean = mb;
    r.degrees_of_freedom = df;
    r.significant = p < 0.05;
    return r;
}

SignificanceResult null_model_check(const CorrectnessMatrix& matrix_real,
                                    const CorrectnessMatrix& matrix_null,
                                    const std::string& baseline_id) {
    if (matrix_real.personas().front() != baseline_id ||
        matrix_null.personas().front() != baseline_id)
        throw DataError("null_model_check: both matrices must lead with the baseline row");
    if (matrix_real.questions() != matrix_null.questions())
        throw DataError("null_model_check: matrices cover different question sets");
    if (matrix_real.row(baseline_id) != matrix_null.row(baseline_id))
        throw DataError("null_model_check: baseline rows disagree between matrices");

    auto terms_of = [&](const CorrectnessMatrix& m) {
        std::set<std::string> c_b = correct_set(m, baseline_id);
        std::vector<double> terms;
        for (const auto& id : m.personas()) {
            if (id == baseline_id) continue;
            if (auto term = bias_term(correct_set(m, id), c_b)) terms.push_back(*term);
        }
        return terms;
    };
    return welch_t_test(terms_of(matrix_real), terms_of(matrix_null));
}

std::optional<ExtractedAnswer> majority_vote(const std::array<ExtractedAnswer, 3>& answers) {
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = i + 1; j < 3; ++j)
            if (answers_match(answers[i], answers[j])) return answers[i];
    return std::nullopt;
}

TrendReport trend_fit(std::vector<TrendPoint> points) {
    if (points.size() < 2) throw DataError("trend_fit: need at least 2 points");
    double sx = 0, sy = 0;
    for (const auto& p : points) {
        sx += p.baseline_correct;
        sy += p.raw_bias;
    }
    double n = static_cast<double>(points.size());
    double mx = sx / n, my = sy / n;
    double sxx = 0, syy = 0, sxy = 0;
    for (const auto& p : points) {
        double dx = p.baseline_correct - mx;
        double dy = p.raw_bias - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx == 0.0) throw DataError("trend_fit: all points share one baseline_correct value");

    TrendReport r;
    r.slope = sxy / sxx;
    r.intercept = my - r.slope * mx;
    // r^2 = squared Pearson correlation; a flat exact fit counts as 1
    r.r_squared = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
    r.points = std::move(points);
    return r;
}

}  // namespace difbench
