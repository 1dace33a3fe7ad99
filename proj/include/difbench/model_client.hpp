#pragma once

#include <cstdint>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace difbench {

enum class SamplingMode { greedy, temperature };
std::string sampling_mode_name(SamplingMode m);
SamplingMode sampling_mode_from(const std::string& name);

struct SamplingParams {
    SamplingMode mode = SamplingMode::greedy;
    double temperature = 0.0;
    int samples_per_question = 1;  // 1 in greedy mode, 3 in temperature mode
    int max_output_tokens = 64;

    static SamplingParams greedy(int max_output_tokens = 64);
    static SamplingParams with_temperature(double t, int max_output_tokens = 64);
    void validate() const;
};

struct RetryPolicy {
    int max_attempts = 3;
    std::vector<int> backoff_ms = {250, 1000};  // last entry repeats
};

struct ModelEndpoint {
    std::string base_url;  // OpenAI-compatible chat-completions service
    std::string model_name;
    std::string auth_env;  // name of the env var holding the bearer token, "" = none
    double timeout_seconds = 30.0;
    int max_parallel = 4;
    RetryPolicy retry;
    bool send_top_k = true;  // greedy mode also sends top_k = 1

    void validate() const;
};

struct ChatRequest {
    std::string system_prompt;
    std::string user_prompt;
    SamplingParams sampling;
    int sample_index = 0;

    void validate() const;
};

class ChatBackend {
public:
    virtual ~ChatBackend() = default;
    virtual std::string complete(const ChatRequest& request) = 0;
    virtual const std::string& model_name() const = 0;
};

// POSTs {base_url}/v1/chat/completions with a system+user message pair.
// Greedy mode sends temperature 0 (plus top_k 1 unless disabled); temperature
// mode sends the configured temperature and seed = sample_index so repeat
// draws are distinguishable on the wire.
class HttpChatClient : public ChatBackend {
public:
    explicit HttpChatClient(ModelEndpoint endpoint);
    std::string complete(const ChatRequest& request) override;
    const std::string& model_name() const override { return endpoint_.model_name; }

    nlohmann::json request_body(const ChatRequest& request) const;
    const ModelEndpoint& endpoint() const { return endpoint_; }

private:
    std::string attempt(const ChatRequest& request);
    ModelEndpoint endpoint_;
    std::string scheme_host_port_;
    std::string path_prefix_;
};

// Content-addressed on-disk store: one JSON file per key under the cache
// directory, keyed by a sha256 over (model, prompts, sampling mode,
// temperature, sample index). Entries carry their own response digest;
// either digest failing to verify on read is an error, never silent refetch.
class ResponseCache {
public:
    explicit ResponseCache(std::filesystem::path dir);

    struct Entry {
        std::string response;
        std::string fetched_at;  // UTC ISO timestamp of the original network call
    };

    static std::string key_for(const std::string& model_name, const ChatRequest& request);
    std::optional<Entry> lookup(const std::string& model_name, const ChatRequest& request) const;
    void store(const std::string& model_name, const ChatRequest& request, const Entry& entry);

    const std::filesystem::path& dir() const { return dir_; }

private:
    static nlohmann::json fingerprint(const std::string& model_name, const ChatRequest& request);
    std::filesystem::path dir_;
    mutable std::mutex write_mutex_;
};

struct CachedResult {
    std::string text;
    bool cache_hit = false;
    std::string fetched_at;
};

// Cache may be null (no caching). Misses call the backend and persist before
// returning.
CachedResult cached_complete(ResponseCache* cache, ChatBackend& backend,
                             const ChatRequest& request);

}  // namespace difbench
