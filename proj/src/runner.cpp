#include "difbench/runner.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <cstring>
#include <mutex>
#include <thread>

#include <fmt/format.h>

#include "difbench/errors.hpp"
#include "difbench/prompts.hpp"
#include "difbench/util.hpp"

namespace difbench {

using nlohmann::json;

namespace {

void require_keys(const json& j, std::initializer_list<const char*> allowed,
                  const std::string& context) {
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (std::find_if(allowed.begin(), allowed.end(),
                         [&](const char* a) { return key == a; }) == allowed.end())
            throw ConfigError(fmt::format("unknown key \"{}\" in {}", key, context));
    }
}

// Created exclusively; the destructor releases it. A leftover file from a
// crashed process has to be removed by hand, and the error says so.
class LockFile {
public:
    explicit LockFile(std::filesystem::path path) : path_(std::move(path)) {
        int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
        if (fd < 0) {
            if (errno == EEXIST)
                throw ConfigError(fmt::format(
                    "{} exists: another run is using this output directory "
                    "(delete the file if that run is gone)",
                    path_.string()));
            throw ConfigError(fmt::format("cannot create {}: {}", path_.string(),
                                          std::strerror(errno)));
        }
        std::string pid = fmt::format("{}\n", ::getpid());
        (void)!::write(fd, pid.data(), pid.size());
        ::close(fd);
    }
    ~LockFile() {
        std::error_code ec;
        std::filesystem::remove(path_, ec);
    }
    LockFile(const LockFile&) = delete;
    LockFile& operator=(const LockFile&) = delete;

private:
    std::filesystem::path path_;
};

}  // namespace

Corpus CorpusSpec::load() const {
    Corpus corpus = load_corpus(path, format);
    if (!name.empty()) corpus.name = name;
    if (policy == "all") return corpus;
    if (policy == "first_n") return sample_first_n(corpus, first_n);
    if (policy == "per_difficulty")
        return sample_per_difficulty(corpus, level_min, level_max, per_level);
    throw ConfigError(fmt::format("unknown corpus sampling policy \"{}\"", policy));
}

RunConfig RunConfig::from_json(const json& doc) {
    if (!doc.is_object()) throw ConfigError("config root must be a JSON object");
    require_keys(doc,
                 {"endpoint", "corpus", "personas", "null_seed", "null_count", "significance",
                  "sampling", "output_dir", "scale", "determinism_probes"},
                 "config");

    RunConfig cfg;

    if (!doc.contains("endpoint") || !doc["endpoint"].is_object())
        throw ConfigError("config needs an \"endpoint\" object");
    const json& ep = doc["endpoint"];
    require_keys(ep,
                 {"base_url", "model_name", "auth_env", "timeout_seconds", "max_parallel",
                  "retry", "send_top_k"},
                 "endpoint");
    cfg.endpoint.base_url = ep.value("base_url", "");
    cfg.endpoint.model_name = ep.value("model_name", "");
    cfg.endpoint.auth_env = ep.value("auth_env", "");
    cfg.endpoint.timeout_seconds = ep.value("timeout_seconds", 30.0);
    cfg.endpoint.max_parallel = ep.value("max_parallel", 4);
    cfg.endpoint.send_top_k = ep.value("send_top_k", true);
    if (ep.contains("retry")) {
        require_keys(ep["retry"], {"max_attempts", "backoff_ms"}, "endpoint.retry");
        cfg.endpoint.retry.max_attempts = ep["retry"].value("max_attempts", 3);
        if (ep["retry"].contains("backoff_ms"))
            cfg.endpoint.retry.backoff_ms =
                ep["retry"]["backoff_ms"].get<std::vector<int>>();
    }

    if (!doc.contains("corpus") || !doc["corpus"].is_object())
        throw ConfigError("config needs a \"corpus\" object");
    const json& co = doc["corpus"];
    require_keys(co, {"path", "format", "name", "policy", "first_n", "level_min", "level_max",
                      "per_level"},
                 "corpus");
    cfg.corpus.path = co.value("path", "");
    cfg.corpus.format = corpus_format_from(co.value("format", "mcq_jsonl"));
    cfg.corpus.name = co.value("name", "");
    cfg.corpus.policy = co.value("policy", "all");
    cfg.corpus.first_n = co.value("first_n", std::size_t{0});
    cfg.corpus.level_min = co.value("level_min", 0);
    cfg.corpus.level_max = co.value("level_max", 0);
    cfg.corpus.per_level = co.value("per_level", std::size_t{0});

    if (doc.contains("personas")) {
        const json& pe = doc["personas"];
        require_keys(pe, {"source", "import_path"}, "personas");
        cfg.personas.source = pe.value("source", "builtin");
        cfg.personas.import_path = pe.value("import_path", "");
    }

    cfg.null_seed = doc.value("null_seed", std::uint64_t{20240612});
    cfg.null_count = doc.value("null_count", std::size_t{20});
    cfg.significance = doc.value("significance", true);

    if (doc.contains("sampling")) {
        const json& sa = doc["sampling"];
        require_keys(sa, {"mode", "temperature", "max_output_tokens"}, "sampling");
        SamplingMode mode = sampling_mode_from(sa.value("mode", "greedy"));
        int max_tokens = sa.value("max_output_tokens", 0);
        if (mode == SamplingMode::greedy)
            cfg.sampling = SamplingParams::greedy(max_tokens);
        else
            cfg.sampling = SamplingParams::with_temperature(sa.value("temperature", 0.0),
                                                            max_tokens);
    } else {
        cfg.sampling = SamplingParams::greedy(0);
    }

    cfg.output_dir = doc.value("output_dir", "");
    cfg.scale = scale_from(doc.value("scale", "percent"));
    cfg.determinism_probes = doc.value("determinism_probes", 4);
    return cfg;
}

json RunConfig::to_json() const {
    json doc;
    doc["endpoint"] = json{
        {"base_url", endpoint.base_url},
        {"model_name", endpoint.model_name},
        {"auth_env", endpoint.auth_env},
        {"timeout_seconds", endpoint.timeout_seconds},
        {"max_parallel", endpoint.max_parallel},
        {"retry", json{{"max_attempts", endpoint.retry.max_attempts},
                       {"backoff_ms", endpoint.retry.backoff_ms}}},
        {"send_top_k", endpoint.send_top_k},
    };
    doc["corpus"] = json{
        {"path", corpus.path.string()},
        {"format", corpus_format_name(corpus.format)},
        {"name", corpus.name},
        {"policy", corpus.policy},
        {"first_n", corpus.first_n},
        {"level_min", corpus.level_min},
        {"level_max", corpus.level_max},
        {"per_level", corpus.per_level},
    };
    doc["personas"] = json{{"source", personas.source},
                           {"import_path", personas.import_path.string()}};
    doc["null_seed"] = null_seed;
    doc["null_count"] = null_count;
    doc["significance"] = significance;
    doc["sampling"] = json{{"mode", sampling_mode_name(sampling.mode)},
                           {"temperature", sampling.temperature},
                           {"max_output_tokens", sampling.max_output_tokens}};
    doc["output_dir"] = output_dir.string();
    doc["scale"] = scale_name(scale);
    doc["determinism_probes"] = determinism_probes;
    return doc;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
    json doc;
    try {
        doc = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw ConfigError(fmt::format("{}: malformed JSON ({})", path.string(), e.what()));
    }
    RunConfig cfg = from_json(doc);
    cfg.validate();
    return cfg;
}

void RunConfig::validate() const {
    endpoint.validate();
    if (corpus.path.empty()) throw ConfigError("corpus.path is empty");
    if (output_dir.empty()) throw ConfigError("output_dir is empty");
    if (personas.source != "builtin" && personas.source != "import")
        throw ConfigError(fmt::format("personas.source must be builtin or import, got \"{}\"",
                                      personas.source));
    if (personas.source == "import" && personas.import_path.empty())
        throw ConfigError("personas.source is import but import_path is empty");
    if (significance && null_count < 2)
        throw ConfigError("null_count must be at least 2 when significance checking is on");
    if (determinism_probes < 0) throw ConfigError("determinism_probes cannot be negative");
    // max_output_tokens 0 means "fill in the per-kind default at run start";
    // everything else about sampling must already be coherent.
    if (sampling.max_output_tokens != 0) sampling.validate();
}

json ResponseRecord::to_json() const {
    return json{
        {"run_id", run_id},
        {"persona_id", persona_id},
        {"question_id", question_id},
        {"sample_index", sample_index},
        {"raw_response", raw_response},
        {"extracted_kind", answer_kind_name(extracted_kind)},
        {"extracted_value", extracted_value},
        {"failure_reason", failure_reason},
        {"correct", correct},
        {"verdict_reason", verdict_reason_name(verdict_reason)},
        {"cache_hit", cache_hit},
        {"timestamp", timestamp},
    };
}

ResponseRecord ResponseRecord::from_json(const json& j, const std::string& context) {
    for (const char* field :
         {"run_id", "persona_id", "question_id", "sample_index", "raw_response",
          "extracted_kind", "extracted_value", "failure_reason", "correct", "verdict_reason",
          "cache_hit", "timestamp"})
        if (!j.contains(field))
            throw DataError(fmt::format("{}: record is missing \"{}\"", context, field));
    ResponseRecord r;
    r.run_id = j["run_id"].get<std::string>();
    r.persona_id = j["persona_id"].get<std::string>();
    r.question_id = j["question_id"].get<std::string>();
    r.sample_index = j["sample_index"].get<int>();
    r.raw_response = j["raw_response"].get<std::string>();
    r.extracted_kind = answer_kind_from(j["extracted_kind"].get<std::string>());
    r.extracted_value = j["extracted_value"].get<std::string>();
    r.failure_reason = j["failure_reason"].get<std::string>();
    r.correct = j["correct"].get<bool>();
    r.verdict_reason = verdict_reason_from(j["verdict_reason"].get<std::string>());
    r.cache_hit = j["cache_hit"].get<bool>();
    r.timestamp = j["timestamp"].get<std::string>();
    return r;
}

ExtractedAnswer ResponseRecord::extracted() const {
    ExtractedAnswer a;
    a.kind = extracted_kind;
    a.value = extracted_value;
    a.raw = raw_response;
    a.failure_reason = failure_reason;
    return a;
}

RunPaths RunPaths::in(const std::filesystem::path& dir) {
    RunPaths p;
    p.dir = dir;
    p.run_json = dir / "run.json";
    p.records = dir / "records.jsonl";
    p.matrix_real = dir / "matrix_real.csv";
    p.matrix_null = dir / "matrix_null.csv";
    p.report_json = dir / "report.json";
    p.report_txt = dir / "report.txt";
    p.cache_dir = dir / "cache";
    p.lock = dir / ".lock";
    return p;
}

std::string compute_run_id(const RunConfig& config, const Corpus& corpus,
                           const PersonaSet& personas) {
    json identity = config.to_json();
    identity.erase("output_dir");  // where artifacts land does not change the experiment
    identity["corpus_digest"] = corpus.source_meta.digest;
    json qids = json::array();
    for (const auto& q : corpus.questions) qids.push_back(q.id);
    identity["question_ids"] = std::move(qids);
    json pids = json::array();
    for (const Persona* p : personas.all()) pids.push_back(p->id);
    identity["persona_ids"] = std::move(pids);
    return sha256_hex(identity.dump()).substr(0, 16);
}

Evaluator::Evaluator(const Corpus& corpus, SamplingParams sampling, ChatBackend& backend,
                     ResponseCache* cache, int max_parallel, std::string run_id)
    : corpus_(corpus),
      sampling_(sampling),
      backend_(backend),
      cache_(cache),
      max_parallel_(max_parallel),
      run_id_(std::move(run_id)) {
    sampling_.validate();
    if (max_parallel_ < 1) throw ConfigError("max_parallel must be at least 1");
    if (corpus_.questions.empty()) throw DataError("cannot evaluate an empty corpus");
}

std::vector<bool> Evaluator::evaluate_persona(const Persona& persona, RecordMap& records) {
    const std::string system_prompt = render_system_prompt(persona);
    const int samples = sampling_.samples_per_question;

    struct Task {
        std::size_t question_index;
        int sample_index;
    };
    std::vector<Task> tasks;
    for (std::size_t qi = 0; qi < corpus_.questions.size(); ++qi)
        for (int s = 0; s < samples; ++s)
            if (!records.count({persona.id, corpus_.questions[qi].id, s}))
                tasks.push_back({qi, s});

    std::vector<ResponseRecord> produced(tasks.size());
    std::vector<std::optional<Probe>> fresh(tasks.size());

    if (!tasks.empty()) {
        std::atomic<std::size_t> next{0};
        std::atomic<bool> stop{false};
        std::exception_ptr first_error;
        std::mutex error_mutex;

        auto work = [&] {
            for (;;) {
                std::size_t i = next.fetch_add(1);
                if (i >= tasks.size() || stop.load()) break;
                try {
                    const Question& q = corpus_.questions[tasks[i].question_index];
                    ChatRequest req;
                    req.system_prompt = system_prompt;
                    req.user_prompt = user_prompt_for(q);
                    req.sampling = sampling_;
                    req.sample_index = tasks[i].sample_index;

                    CachedResult res = cached_complete(cache_, backend_, req);
                    ExtractedAnswer ext =
                        q.kind == QuestionKind::multiple_choice
                            ? extract_mcq_letter(res.text, q.option_letters())
                            : extract_boxed(res.text);
                    Verdict verdict = grade(ext, q);

                    ResponseRecord r;
                    r.run_id = run_id_;
                    r.persona_id = persona.id;
                    r.question_id = q.id;
                    r.sample_index = tasks[i].sample_index;
                    r.raw_response = res.text;
                    r.extracted_kind = ext.kind;
                    r.extracted_value = ext.value;
                    r.failure_reason = ext.failure_reason;
                    r.correct = verdict.correct;
                    r.verdict_reason = verdict.reason;
                    r.cache_hit = res.cache_hit;
                    r.timestamp = res.fetched_at;
                    produced[i] = std::move(r);
                    if (!res.cache_hit) fresh[i] = Probe{req, res.text};
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                    stop.store(true);
                }
            }
        };

        std::size_t worker_count =
            std::min<std::size_t>(static_cast<std::size_t>(max_parallel_), tasks.size());
        std::vector<std::thread> workers;
        workers.reserve(worker_count);
        for (std::size_t w = 0; w < worker_count; ++w) workers.emplace_back(work);
        for (auto& t : workers) t.join();
        if (first_error) std::rethrow_exception(first_error);

        for (std::size_t i = 0; i < tasks.size(); ++i) {
            records.emplace(RecordKey{persona.id, produced[i].question_id,
                                      produced[i].sample_index},
                            produced[i]);
            if (fresh[i]) {
                probes_.push_back(std::move(*fresh[i]));
                ++network_calls_;
            }
        }
    }

    std::vector<std::string> qids;
    qids.reserve(corpus_.questions.size());
    for (const auto& q : corpus_.questions) qids.push_back(q.id);
    return row_from_records(qids, persona.id, records, samples);
}

std::vector<bool> row_from_records(const std::vector<std::string>& question_ids,
                                   const std::string& persona_id, const RecordMap& records,
                                   int samples_per_question) {
    std::vector<bool> row;
    row.reserve(question_ids.size());
    for (const auto& qid : question_ids) {
        if (samples_per_question == 1) {
            auto it = records.find({persona_id, qid, 0});
            if (it == records.end())
                throw DataError(fmt::format("no record for persona {} question {}", persona_id,
                                            qid));
            row.push_back(it->second.correct);
            continue;
        }
        std::array<ExtractedAnswer, 3> answers;
        std::array<bool, 3> verdicts{};
        for (int s = 0; s < samples_per_question; ++s) {
            auto it = records.find({persona_id, qid, s});
            if (it == records.end())
                throw DataError(fmt::format("no record for persona {} question {} sample {}",
                                            persona_id, qid, s));
            answers[static_cast<std::size_t>(s)] = it->second.extracted();
            verdicts[static_cast<std::size_t>(s)] = it->second.correct;
        }
        auto winner = majority_vote(answers);
        if (!winner) {
            row.push_back(false);  // three-way disagreement is automatically incorrect
            continue;
        }
        bool cell = false;
        for (int s = 0; s < samples_per_question; ++s)
            if (answers_match(*winner, answers[static_cast<std::size_t>(s)])) {
                cell = verdicts[static_cast<std::size_t>(s)];
                break;
            }
        row.push_back(cell);
    }
    return row;
}

void write_records(const std::filesystem::path& path,
                   const std::vector<std::string>& question_ids,
                   const std::vector<const Persona*>& personas, const RecordMap& records,
                   int samples_per_question) {
    std::string out;
    for (const Persona* p : personas)
        for (const auto& qid : question_ids)
            for (int s = 0; s < samples_per_question; ++s) {
                auto it = records.find({p->id, qid, s});
                if (it == records.end()) continue;
                out += it->second.to_json().dump();
                out += '\n';
            }
    write_file(path, out);
}

RecordMap load_records(const std::filesystem::path& path) {
    RecordMap records;
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
            throw DataError(fmt::format("{}:{}: malformed record ({})", path.string(), line_no,
                                        e.what()));
        }
        ResponseRecord r =
            ResponseRecord::from_json(j, fmt::format("{}:{}", path.string(), line_no));
        RecordKey key{r.persona_id, r.question_id, r.sample_index};
        if (records.count(key))
            throw DataError(fmt::format("{}:{}: duplicate record for ({}, {}, {})",
                                        path.string(), line_no, r.persona_id, r.question_id,
                                        r.sample_index));
        records.emplace(std::move(key), std::move(r));
    }
    return records;
}

namespace {

struct RunDocPieces {
    std::string run_id;
    std::string model_name;
    std::string corpus_name;
    std::string corpus_digest;
    std::vector<std::string> question_ids;
    PersonaSet personas;
    SamplingParams sampling;
    Scale scale = Scale::percent;
    std::uint64_t null_seed = 0;
    bool significance = true;
};

RunDocPieces parse_run_doc(const json& doc, const std::string& context) {
    for (const char* field : {"run_id", "config", "corpus", "personas"})
        if (!doc.contains(field))
            throw DataError(fmt::format("{}: missing \"{}\"", context, field));

    RunDocPieces pieces;
    pieces.run_id = doc["run_id"].get<std::string>();

    RunConfig cfg = RunConfig::from_json(doc["config"]);
    pieces.model_name = cfg.endpoint.model_name;
    pieces.sampling = cfg.sampling;
    pieces.scale = cfg.scale;
    pieces.null_seed = cfg.null_seed;
    pieces.significance = cfg.significance;

    const json& co = doc["corpus"];
    pieces.corpus_name = co.value("name", "");
    pieces.corpus_digest = co.value("digest", "");
    pieces.question_ids = co["question_ids"].get<std::vector<std::string>>();

    const json& pe = doc["personas"];
    pieces.personas.baseline = persona_from_json(pe["baseline"], context + ": baseline");
    for (const auto& j : pe["real"])
        pieces.personas.real.push_back(persona_from_json(j, context + ": real persona"));
    for (const auto& j : pe["nulls"])
        pieces.personas.nulls.push_back(persona_from_json(j, context + ": null persona"));
    pieces.personas.seed = pieces.null_seed;
    return pieces;
}

double parse_failure_rate(const RecordMap& records, const std::string& persona_id,
                          const std::vector<std::string>& question_ids, int samples) {
    std::size_t failures = 0;
    std::size_t total = 0;
    for (const auto& qid : question_ids)
        for (int s = 0; s < samples; ++s) {
            auto it = records.find({persona_id, qid, s});
            if (it == records.end()) continue;
            ++total;
            if (it->second.extracted_kind == AnswerKind::parse_failure) ++failures;
        }
    if (total == 0) return 0.0;
    return static_cast<double>(failures) / static_cast<double>(total);
}

ScoredRun score_impl(const RunDocPieces& pieces, const RecordMap& records,
                     std::optional<Scale> scale_override) {
    const Scale scale = scale_override.value_or(pieces.scale);
    const int samples = pieces.sampling.samples_per_question;
    const std::string& baseline_id = pieces.personas.baseline.id;

    std::vector<std::string> real_ids;
    for (const auto& p : pieces.personas.real) real_ids.push_back(p.id);
    std::vector<std::string> null_ids;
    for (const auto& p : pieces.personas.nulls) null_ids.push_back(p.id);

    MatrixProvenance prov{pieces.run_id, pieces.corpus_digest};

    std::vector<std::string> real_rows{baseline_id};
    real_rows.insert(real_rows.end(), real_ids.begin(), real_ids.end());
    CorrectnessMatrix matrix_real(real_rows, pieces.question_ids, prov);
    std::vector<std::string> null_rows{baseline_id};
    null_rows.insert(null_rows.end(), null_ids.begin(), null_ids.end());
    CorrectnessMatrix matrix_null(null_rows, pieces.question_ids, prov);

    auto fill = [&](CorrectnessMatrix& m, const std::string& persona_id) {
        m.set_row(persona_id,
                  row_from_records(pieces.question_ids, persona_id, records, samples));
    };
    fill(matrix_real, baseline_id);
    for (const auto& id : real_ids) fill(matrix_real, id);
    fill(matrix_null, baseline_id);
    for (const auto& id : null_ids) fill(matrix_null, id);

    ScoredRun out;
    out.matrix_real = matrix_real;
    out.matrix_null = matrix_null;

    RunReport& report = out.report;
    report.run_id = pieces.run_id;
    report.model_name = pieces.model_name;
    report.corpus_name = pieces.corpus_name;
    report.corpus_digest = pieces.corpus_digest;
    report.corpus_size = pieces.question_ids.size();
    report.sampling = pieces.sampling;
    report.scale = scale;
    report.null_seed = pieces.null_seed;

    report.breakdown = bias_score(matrix_real, real_ids, scale);

    auto make_row = [&](const Persona& p, const CorrectnessMatrix& m) {
        PersonaReportRow row;
        row.id = p.id;
        row.display_name = p.display_name;
        row.category = persona_category_name(p.category);
        row.correct = m.correct_count(p.id);
        row.parse_failure_rate =
            parse_failure_rate(records, p.id, pieces.question_ids, samples);
        return row;
    };

    report.baseline = make_row(pieces.personas.baseline, matrix_real);
    for (std::size_t i = 0; i < pieces.personas.real.size(); ++i) {
        PersonaReportRow row = make_row(pieces.personas.real[i], matrix_real);
        row.bias_term = report.breakdown.terms[i].second;
        report.real.push_back(std::move(row));
    }
    auto baseline_set = correct_set(matrix_null, baseline_id);
    for (const auto& p : pieces.personas.nulls) {
        PersonaReportRow row = make_row(p, matrix_null);
        row.bias_term = bias_term(correct_set(matrix_null, p.id), baseline_set);
        report.nulls.push_back(std::move(row));
    }

    if (!pieces.significance) {
        report.significance_note = "significance checking disabled in config";
    } else if (pieces.personas.nulls.size() < 2) {
        report.significance_note = "fewer than two null personas";
    } else {
        try {
            report.significance = null_model_check(matrix_real, matrix_null, baseline_id);
        } catch (const DataError& e) {
            report.significance_note = e.what();
        }
    }
    return out;
}

void write_scored(const RunPaths& paths, const ScoredRun& scored) {
    scored.matrix_real.write_csv(paths.matrix_real);
    scored.matrix_null.write_csv(paths.matrix_null);
    write_file(paths.report_json, scored.report.to_json().dump(2) + "\n");
    write_file(paths.report_txt, scored.report.render_text());
}

}  // namespace

RunReport run_benchmark(const RunConfig& config_in, ChatBackend* backend_override) {
    RunConfig config = config_in;
    config.validate();

    Corpus corpus = config.corpus.load();
    if (config.sampling.max_output_tokens == 0)
        config.sampling.max_output_tokens =
            default_max_output_tokens(corpus.questions.front().kind);
    config.sampling.validate();

    PersonaSet personas = config.personas.source == "import"
                              ? import_personas(config.personas.import_path)
                              : builtin_personas();
    if (config.null_count > 0)
        attach_null_personas(personas, config.null_seed, config.null_count);
    else
        personas.seed = config.null_seed;

    const std::string run_id = compute_run_id(config, corpus, personas);
    RunPaths paths = RunPaths::in(config.output_dir);
    std::filesystem::create_directories(paths.dir);
    LockFile lock(paths.lock);

    RecordMap records;
    if (std::filesystem::exists(paths.records)) {
        records = load_records(paths.records);
        for (const auto& [key, record] : records) {
            (void)key;
            if (record.run_id != run_id)
                throw ConfigError(fmt::format(
                    "{} holds records for run {}, but this configuration is run {}; "
                    "use a fresh output directory",
                    paths.records.string(), record.run_id, run_id));
        }
    }

    std::unique_ptr<HttpChatClient> http;
    ChatBackend* backend = backend_override;
    if (backend == nullptr) {
        http = std::make_unique<HttpChatClient>(config.endpoint);
        backend = http.get();
    }
    ResponseCache cache(paths.cache_dir);

    json run_doc;
    run_doc["run_id"] = run_id;
    run_doc["config"] = config.to_json();
    run_doc["corpus"] = json{{"name", corpus.name},
                             {"digest", corpus.source_meta.digest},
                             {"path", corpus.source_meta.path},
                             {"size", corpus.size()},
                             {"sampling_policy", corpus.source_meta.sampling_policy},
                             {"shortfalls", corpus.source_meta.shortfalls}};
    json qids = json::array();
    for (const auto& q : corpus.questions) qids.push_back(q.id);
    run_doc["corpus"]["question_ids"] = std::move(qids);
    run_doc["personas"] = json{{"baseline", persona_to_json(personas.baseline)},
                               {"real", json::array()},
                               {"nulls", json::array()},
                               {"null_seed", personas.seed}};
    for (const auto& p : personas.real) run_doc["personas"]["real"].push_back(persona_to_json(p));
    for (const auto& p : personas.nulls)
        run_doc["personas"]["nulls"].push_back(persona_to_json(p));
    write_file(paths.run_json, run_doc.dump(2) + "\n");

    std::vector<std::string> question_ids;
    for (const auto& q : corpus.questions) question_ids.push_back(q.id);

    Evaluator evaluator(corpus, config.sampling, *backend, &cache,
                        config.endpoint.max_parallel, run_id);
    for (const Persona* p : personas.all()) {
        evaluator.evaluate_persona(*p, records);
        write_records(paths.records, question_ids, personas.all(), records,
                      config.sampling.samples_per_question);
    }

    if (config.sampling.mode == SamplingMode::greedy && config.determinism_probes > 0) {
        std::size_t count = std::min<std::size_t>(
            static_cast<std::size_t>(config.determinism_probes), evaluator.probes().size());
        for (std::size_t i = 0; i < count; ++i) {
            const auto& probe = evaluator.probes()[i];
            std::string again = backend->complete(probe.request);
            if (again != probe.expected)
                throw DeterminismError(fmt::format(
                    "endpoint returned different text for an identical greedy request "
                    "(probe {}/{}): first \"{}\", then \"{}\"",
                    i + 1, count, probe.expected, again));
        }
    }

    ScoredRun scored = score_impl(parse_run_doc(run_doc, paths.run_json.string()), records,
                                  std::nullopt);
    write_scored(paths, scored);
    return scored.report;
}

ScoredRun score_records(const std::filesystem::path& run_dir,
                        std::optional<Scale> scale_override) {
    RunPaths paths = RunPaths::in(run_dir);
    if (!std::filesystem::exists(paths.run_json))
        throw ConfigError(fmt::format("{} not found; is {} a run directory?",
                                      paths.run_json.string(), run_dir.string()));
    json run_doc;
    try {
        run_doc = json::parse(read_file(paths.run_json));
    } catch (const json::parse_error& e) {
        throw DataError(fmt::format("{}: malformed JSON ({})", paths.run_json.string(),
                                    e.what()));
    }
    RunDocPieces pieces = parse_run_doc(run_doc, paths.run_json.string());
    RecordMap records = load_records(paths.records);
    for (const auto& [key, record] : records) {
        (void)key;
        if (record.run_id != pieces.run_id)
            throw DataError(fmt::format("{}: record run_id {} does not match run.json ({})",
                                        paths.records.string(), record.run_id, pieces.run_id));
    }
    return score_impl(pieces, records, scale_override);
}

ScoredRun score_and_write(const std::filesystem::path& run_dir,
                          std::optional<Scale> scale_override) {
    ScoredRun scored = score_records(run_dir, scale_override);
    write_scored(RunPaths::in(run_dir), scored);
    return scored;
}

SignificanceResult null_check_run(const std::filesystem::path& run_dir) {
    RunPaths paths = RunPaths::in(run_dir);
    for (const auto& p : {paths.matrix_real, paths.matrix_null})
        if (!std::filesystem::exists(p))
            throw ConfigError(fmt::format("{} not found; run `score` first", p.string()));
    CorrectnessMatrix real = CorrectnessMatrix::read_csv(paths.matrix_real);
    CorrectnessMatrix null_m = CorrectnessMatrix::read_csv(paths.matrix_null);
    if (real.personas().empty()) throw DataError("real matrix has no personas");
    return null_model_check(real, null_m, real.personas().front());
}

TrendReport trend_aggregate(const std::vector<json>& reports) {
    if (reports.size() < 2)
        throw ConfigError("trend aggregation needs at least two run reports");
    std::string digest;
    std::vector<TrendPoint> points;
    for (const auto& doc : reports) {
        for (const char* field : {"model", "corpus", "baseline", "bias"})
            if (!doc.contains(field))
                throw DataError(fmt::format("run report is missing \"{}\"", field));
        std::string d = doc["corpus"].value("digest", "");
        if (digest.empty())
            digest = d;
        else if (digest != d)
            throw DataError(fmt::format(
                "run reports cover different corpora (digest {} vs {})", digest, d));
        TrendPoint pt;
        pt.label = doc["model"].get<std::string>();
        pt.baseline_correct = doc["baseline"].value("correct", 0.0);
        pt.raw_bias = doc["bias"].value("mean", 0.0);
        points.push_back(std::move(pt));
    }
    return trend_fit(std::move(points));
}

TrendReport trend_aggregate_files(const std::vector<std::filesystem::path>& report_paths) {
    std::vector<json> docs;
    for (const auto& p : report_paths) {
        try {
            docs.push_back(json::parse(read_file(p)));
        } catch (const json::parse_error& e) {
            throw DataError(fmt::format("{}: malformed JSON ({})", p.string(), e.what()));
        }
    }
    return trend_aggregate(docs);
}

}  // namespace difbench
