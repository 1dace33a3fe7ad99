#include <chrono>
#include <cstdio>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <fmt/format.h>

#include "CLI11.hpp"

#include "difbench/converters.hpp"
#include "difbench/errors.hpp"
#include "difbench/mock_model.hpp"
#include "difbench/runner.hpp"
#include "difbench/stub_server.hpp"
#include "difbench/util.hpp"

namespace {

using namespace difbench;

struct RunOverrides {
    std::string output_dir;
    std::string base_url;
    std::string model_name;
    std::string scale;
    std::optional<std::uint64_t> null_seed;
    std::optional<std::size_t> null_count;
    std::optional<int> max_parallel;
    std::optional<int> probes;
    bool no_significance = false;
};

void apply(const RunOverrides& ov, RunConfig& cfg) {
    if (!ov.output_dir.empty()) cfg.output_dir = ov.output_dir;
    if (!ov.base_url.empty()) cfg.endpoint.base_url = ov.base_url;
    if (!ov.model_name.empty()) cfg.endpoint.model_name = ov.model_name;
    if (!ov.scale.empty()) cfg.scale = scale_from(ov.scale);
    if (ov.null_seed) cfg.null_seed = *ov.null_seed;
    if (ov.null_count) cfg.null_count = *ov.null_count;
    if (ov.max_parallel) cfg.endpoint.max_parallel = *ov.max_parallel;
    if (ov.probes) cfg.determinism_probes = *ov.probes;
    if (ov.no_significance) cfg.significance = false;
    cfg.validate();
}

int cmd_run(const std::string& config_path, const RunOverrides& overrides) {
    RunConfig cfg = RunConfig::load(config_path);
    apply(overrides, cfg);
    RunReport report = run_benchmark(cfg);
    fmt::print("{}", report.render_text());
    fmt::print("artifacts: {}\n", cfg.output_dir.string());
    return 0;
}

int cmd_score(const std::string& run_dir, const std::string& scale) {
    std::optional<Scale> override;
    if (!scale.empty()) override = scale_from(scale);
    ScoredRun scored = score_and_write(run_dir, override);
    fmt::print("{}", scored.report.render_text());
    return 0;
}

int cmd_null_check(const std::string& run_dir) {
    SignificanceResult sig = null_check_run(run_dir);
    fmt::print("real-term mean {:.6f} vs null-term mean {:.6f}\n", sig.real_mean,
               sig.null_mean);
    fmt::print("Welch t = {:.4f}, df = {:.2f}, one-sided p = {:.6g} -> {} at a = 0.05\n",
               sig.t_statistic, sig.degrees_of_freedom, sig.p_value,
               sig.significant ? "significant" : "not significant");
    return 0;
}

int cmd_report(const std::string& run_dir, const std::string& scale) {
    std::optional<Scale> override;
    if (!scale.empty()) override = scale_from(scale);
    ScoredRun scored = score_records(run_dir, override);
    fmt::print("{}", scored.report.render_text());
    return 0;
}

int cmd_trend(const std::vector<std::string>& report_paths, const std::string& out_path) {
    std::vector<std::filesystem::path> paths(report_paths.begin(), report_paths.end());
    TrendReport trend = trend_aggregate_files(paths);
    for (const auto& p : trend.points)
        fmt::print("{:<24} correct {:>8.1f}  bias {:.6f}\n", p.label, p.baseline_correct,
                   p.raw_bias);
    fmt::print("fit: bias = {:.6g} * correct + {:.6g}, r^2 = {:.4f}\n", trend.slope,
               trend.intercept, trend.r_squared);
    if (!out_path.empty()) {
        write_file(out_path, trend_to_json(trend).dump(2) + "\n");
        fmt::print("wrote {}\n", out_path);
    }
    return 0;
}

int cmd_convert(const std::string& upstream, const std::string& in, const std::string& out) {
    convert_dataset(upstream, in, out);
    fmt::print("wrote {}\n", out);
    return 0;
}

int cmd_stub(const std::string& corpus_path, const std::string& format, int port,
             double flip, double null_flip, std::uint64_t behavior_seed,
             std::uint64_t null_seed, std::size_t null_count, int latency_ms) {
    Corpus corpus = load_corpus(corpus_path, corpus_format_from(format));
    PersonaSet personas = builtin_personas();
    attach_null_personas(personas, null_seed, null_count);

    MockBehavior behavior;
    behavior.seed = behavior_seed;
    behavior.latency_ms = latency_ms;
    for (const auto& p : personas.real) behavior.flip_probability_by_persona[p.id] = flip;
    for (const auto& p : personas.nulls)
        behavior.flip_probability_by_persona[p.id] = null_flip;

    StubServer server(corpus, personas, behavior);
    server.start(port);
    fmt::print("stub endpoint: {} (model {}, {} questions, flip {:g}, null flip {:g})\n",
               server.base_url(), server.mock().model_name(), corpus.size(), flip, null_flip);
    fmt::print("stop with Ctrl-C\n");
    for (;;) std::this_thread::sleep_for(std::chrono::seconds(3600));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Persona-sensitivity benchmark for chat models"};
    app.require_subcommand(1);

    // run
    auto* run = app.add_subcommand("run", "Execute a full benchmark from a config file");
    std::string run_config;
    RunOverrides overrides;
    run->add_option("-c,--config", run_config, "JSON config file")->required();
    run->add_option("--output-dir", overrides.output_dir, "Override output directory");
    run->add_option("--base-url", overrides.base_url, "Override endpoint base URL");
    run->add_option("--model-name", overrides.model_name, "Override model name");
    run->add_option("--scale", overrides.scale, "Display scale: unit or percent");
    run->add_option("--null-seed", overrides.null_seed, "Override null-persona seed");
    run->add_option("--null-count", overrides.null_count, "Override null-persona count");
    run->add_option("--max-parallel", overrides.max_parallel, "Override request parallelism");
    run->add_option("--probes", overrides.probes, "Determinism probe count (greedy mode)");
    run->add_flag("--no-significance", overrides.no_significance,
                  "Skip the null-model significance check");

    // score
    auto* score = app.add_subcommand("score", "Recompute matrices and reports from records");
    std::string score_dir, score_scale;
    score->add_option("-r,--run-dir", score_dir, "Run directory")->required();
    score->add_option("--scale", score_scale, "Display scale: unit or percent");

    // null-check
    auto* nullcheck = app.add_subcommand("null-check", "Significance check from matrices");
    std::string null_dir;
    nullcheck->add_option("-r,--run-dir", null_dir, "Run directory")->required();

    // report
    auto* rep = app.add_subcommand("report", "Render the report from persisted records");
    std::string report_dir, report_scale;
    rep->add_option("-r,--run-dir", report_dir, "Run directory")->required();
    rep->add_option("--scale", report_scale, "Display scale: unit or percent");

    // trend
    auto* trend = app.add_subcommand("trend", "Fit bias vs correctness across runs");
    std::vector<std::string> trend_reports;
    std::string trend_out;
    trend->add_option("reports", trend_reports, "report.json files (two or more)")
        ->expected(-2);
    trend->add_option("-o,--out", trend_out, "Write the fit as JSON");

    // convert
    auto* convert = app.add_subcommand("convert", "Normalize an upstream dataset dump");
    std::string conv_from, conv_in, conv_out;
    convert->add_option("--from", conv_from, "Upstream layout: gsmmc, mathqa, deepmath")
        ->required();
    convert->add_option("-i,--in", conv_in, "Upstream JSONL file")->required();
    convert->add_option("-o,--out", conv_out, "Normalized JSONL output")->required();

    // stub
    auto* stub = app.add_subcommand("stub", "Serve a deterministic mock endpoint");
    std::string stub_corpus, stub_format = "mcq_jsonl";
    int stub_port = 0, stub_latency = 0;
    double stub_flip = 0.05, stub_null_flip = 0.005;
    std::uint64_t stub_seed = 7, stub_null_seed = 20240612;
    std::size_t stub_null_count = 20;
    stub->add_option("--corpus", stub_corpus, "Normalized question JSONL")->required();
    stub->add_option("--format", stub_format, "mcq_jsonl or exact_jsonl");
    stub->add_option("--port", stub_port, "Port (default: ephemeral)");
    stub->add_option("--flip", stub_flip, "Wrong-answer probability for real personas");
    stub->add_option("--null-flip", stub_null_flip,
                     "Wrong-answer probability for null personas");
    stub->add_option("--behavior-seed", stub_seed, "Seed for the flip decisions");
    stub->add_option("--null-seed", stub_null_seed, "Null-persona name seed");
    stub->add_option("--null-count", stub_null_count, "Null-persona count");
    stub->add_option("--latency-ms", stub_latency, "Artificial per-request latency");

    try {
        app.parse(argc, argv);
        if (*run) return cmd_run(run_config, overrides);
        if (*score) return cmd_score(score_dir, score_scale);
        if (*nullcheck) return cmd_null_check(null_dir);
        if (*rep) return cmd_report(report_dir, report_scale);
        if (*trend) return cmd_trend(trend_reports, trend_out);
        if (*convert) return cmd_convert(conv_from, conv_in, conv_out);
        if (*stub)
            return cmd_stub(stub_corpus, stub_format, stub_port, stub_flip, stub_null_flip,
                            stub_seed, stub_null_seed, stub_null_count, stub_latency);
        return 1;
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const TransportError& e) {
        fmt::print(stderr, "transport error: {}\n", e.what());
        return 2;
    } catch (const DeterminismError& e) {
        fmt::print(stderr, "determinism violation: {}\n", e.what());
        return 3;
    } catch (const Error& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return 1;
    }
}
