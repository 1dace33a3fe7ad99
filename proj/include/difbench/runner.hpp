#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "json.hpp"

#include "difbench/corpus.hpp"
#include "difbench/extraction.hpp"
#include "difbench/metrics.hpp"
#include "difbench/model_client.hpp"
#include "difbench/persona.hpp"

namespace difbench {

struct CorpusSpec {
    std::filesystem::path path;
    CorpusFormat format = CorpusFormat::mcq_jsonl;
    std::string name;                // defaults to the file stem
    std::string policy = "all";      // all | first_n | per_difficulty
    std::size_t first_n = 0;
    int level_min = 0;
    int level_max = 0;
    std::size_t per_level = 0;

    Corpus load() const;
};

struct PersonaSource {
    std::string source = "builtin";  // builtin | import
    std::filesystem::path import_path;
};

struct RunConfig {
    ModelEndpoint endpoint;
    CorpusSpec corpus;
    PersonaSource personas;
    std::uint64_t null_seed = 20240612;
    std::size_t null_count = 20;
    bool significance = true;
    SamplingParams sampling;         // max_output_tokens 0 = per-kind default
    std::filesystem::path output_dir;
    Scale scale = Scale::percent;
    int determinism_probes = 4;      // greedy mode only; 0 disables

    static RunConfig from_json(const nlohmann::json& doc);
    nlohmann::json to_json() const;
    static RunConfig load(const std::filesystem::path& path);
    void validate() const;
};

struct ResponseRecord {
    std::string run_id;
    std::string persona_id;
    std::string question_id;
    int sample_index = 0;
    std::string raw_response;
    AnswerKind extracted_kind = AnswerKind::parse_failure;
    std::string extracted_value;
    std::string failure_reason;
    bool correct = false;
    VerdictReason verdict_reason = VerdictReason::parse_failure;
    bool cache_hit = false;
    std::string timestamp;  // UTC ISO, when the response was originally fetched

    nlohmann::json to_json() const;
    static ResponseRecord from_json(const nlohmann::json& j, const std::string& context);
    ExtractedAnswer extracted() const;
};

using RecordKey = std::tuple<std::string, std::string, int>;  // persona, question, sample
using RecordMap = std::map<RecordKey, ResponseRecord>;

struct RunPaths {
    std::filesystem::path dir;
    std::filesystem::path run_json;
    std::filesystem::path records;
    std::filesystem::path matrix_real;
    std::filesystem::path matrix_null;
    std::filesystem::path report_json;
    std::filesystem::path report_txt;
    std::filesystem::path cache_dir;
    std::filesystem::path lock;

    static RunPaths in(const std::filesystem::path& dir);
};

struct PersonaReportRow {
    std::string id;
    std::string display_name;
    std::string category;
    std::size_t correct = 0;
    double parse_failure_rate = 0.0;
    std::optional<double> bias_term;  // absent for baseline and undefined terms
};

struct RunReport {
    std::string run_id;
    std::string model_name;
    std::string corpus_name;
    std::string corpus_digest;
    std::size_t corpus_size = 0;
    SamplingParams sampling;
    Scale scale = Scale::percent;
    std::uint64_t null_seed = 0;
    PersonaReportRow baseline;
    std::vector<PersonaReportRow> real;
    std::vector<PersonaReportRow> nulls;
    BiasBreakdown breakdown;
    std::optional<SignificanceResult> significance;
    std::string significance_note;  // reason when significance is absent

    nlohmann::json to_json() const;   // machine document, unit scale
    std::string render_text() const;  // human tables, honors `scale`
};

std::string compute_run_id(const RunConfig& config, const Corpus& corpus,
                           const PersonaSet& personas);

// Evaluates one persona at a time, fanning questions (x samples) out across
// up to max_parallel workers. Existing records are reused verbatim; fresh
// responses go through the cache. Records land in canonical
// (persona, question, sample) order regardless of completion order.
class Evaluator {
public:
    Evaluator(const Corpus& corpus, SamplingParams sampling, ChatBackend& backend,
              ResponseCache* cache, int max_parallel, std::string run_id);

    std::vector<bool> evaluate_persona(const Persona& persona, RecordMap& records);

    struct Probe {
        ChatRequest request;
        std::string expected;
    };
    const std::vector<Probe>& probes() const { return probes_; }
    int network_calls() const { return network_calls_; }

private:
    const Corpus& corpus_;
    SamplingParams sampling_;
    ChatBackend& backend_;
    ResponseCache* cache_;
    int max_parallel_;
    std::string run_id_;
    std::vector<Probe> probes_;
    int network_calls_ = 0;
};

// Full pipeline: evaluate baseline + real + null personas, persist evidence,
// score, and write run artifacts. `backend` overrides the HTTP client (used
// by tests to run against an in-process mock).
RunReport run_benchmark(const RunConfig& config, ChatBackend* backend = nullptr);

struct ScoredRun {
    RunReport report;
    CorrectnessMatrix matrix_real;
    CorrectnessMatrix matrix_null;
};

// Recompute matrices + report purely from run.json + records.jsonl.
ScoredRun score_records(const std::filesystem::path& run_dir,
                        std::optional<Scale> scale_override = std::nullopt);

// score_records + rewrite matrix/report artifacts in place.
ScoredRun score_and_write(const std::filesystem::path& run_dir,
                          std::optional<Scale> scale_override = std::nullopt);

SignificanceResult null_check_run(const std::filesystem::path& run_dir);

// Aggregate ≥2 per-run report.json documents over the same corpus into a
// bias-vs-correctness trend.
TrendReport trend_aggregate(const std::vector<nlohmann::json>& reports);
TrendReport trend_aggregate_files(const std::vector<std::filesystem::path>& report_paths);
nlohmann::json trend_to_json(const TrendReport& trend);

// Grid cell for one persona across the question list: the sample verdict in
// greedy mode, the majority-vote verdict in temperature mode.
std::vector<bool> row_from_records(const std::vector<std::string>& question_ids,
                                   const std::string& persona_id, const RecordMap& records,
                                   int samples_per_question);

void write_records(const std::filesystem::path& path,
                   const std::vector<std::string>& question_ids,
                   const std::vector<const Persona*>& personas, const RecordMap& records,
                   int samples_per_question);
RecordMap load_records(const std::filesystem::path& path);

}  // namespace difbench
