#include "difbench/model_client.hpp"

#include <chrono>
#include <cstdlib>
#include <thread>

#include <fmt/format.h>

#include "httplib.h"

#include "difbench/errors.hpp"
#include "difbench/util.hpp"

namespace difbench {

using nlohmann::json;

std::string sampling_mode_name(SamplingMode m) {
    return m == SamplingMode::greedy ? "greedy" : "temperature";
}

SamplingMode sampling_mode_from(const std::string& name) {
    if (name == "greedy") return SamplingMode::greedy;
    if (name == "temperature") return SamplingMode::temperature;
    throw ConfigError(fmt::format("unknown sampling mode '{}'", name));
}

SamplingParams SamplingParams::greedy(int max_output_tokens) {
    SamplingParams p;
    p.mode = SamplingMode::greedy;
    p.temperature = 0.0;
    p.samples_per_question = 1;
    p.max_output_tokens = max_output_tokens;
    return p;
}

SamplingParams SamplingParams::with_temperature(double t, int max_output_tokens) {
    SamplingParams p;
    p.mode = SamplingMode::temperature;
    p.temperature = t;
    p.samples_per_question = 3;
    p.max_output_tokens = max_output_tokens;
    return p;
}

void SamplingParams::validate() const {
    if (max_output_tokens <= 0)
        throw ConfigError("max_output_tokens must be positive");
    if (mode == SamplingMode::greedy) {
        if (temperature != 0.0)
            throw ConfigError("greedy sampling requires temperature 0");
        if (samples_per_question != 1)
            throw ConfigError("greedy sampling uses exactly one sample per question");
    } else {
        if (temperature <= 0.0)
            throw ConfigError("temperature sampling requires temperature > 0");
        if (samples_per_question != 3)
            throw ConfigError("temperature sampling uses exactly three samples per question");
    }
}

void ModelEndpoint::validate() const {
    if (base_url.empty()) throw ConfigError("model endpoint base_url is empty");
    if (base_url.find("://") == std::string::npos)
        throw ConfigError(fmt::format("base_url '{}' is missing a scheme", base_url));
    if (model_name.empty()) throw ConfigError("model_name is empty");
    if (timeout_seconds <= 0) throw ConfigError("timeout_seconds must be positive");
    if (max_parallel < 1) throw ConfigError("max_parallel must be at least 1");
    if (retry.max_attempts < 1) throw ConfigError("retry.max_attempts must be at least 1");
}

void ChatRequest::validate() const {
    sampling.validate();
    if (system_prompt.empty()) throw ConfigError("chat request has an empty system prompt");
    if (user_prompt.empty()) throw ConfigError("chat request has an empty user prompt");
    if (sample_index < 0 || sample_index >= sampling.samples_per_question)
        throw ConfigError(fmt::format("sample_index {} out of range for {} samples",
                                      sample_index, sampling.samples_per_question));
}

HttpChatClient::HttpChatClient(ModelEndpoint endpoint) : endpoint_(std::move(endpoint)) {
    endpoint_.validate();
    std::string url = endpoint_.base_url;
    while (!url.empty() && url.back() == '/') url.pop_back();
    auto scheme_end = url.find("://");
    auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
        scheme_host_port_ = url;
        path_prefix_.clear();
    } else {
        scheme_host_port_ = url.substr(0, path_start);
        path_prefix_ = url.substr(path_start);
    }
}

json HttpChatClient::request_body(const ChatRequest& request) const {
    json body;
    body["model"] = endpoint_.model_name;
    body["messages"] = json::array({
        json{{"role", "system"}, {"content", request.system_prompt}},
        json{{"role", "user"}, {"content", request.user_prompt}},
    });
    body["max_tokens"] = request.sampling.max_output_tokens;
    if (request.sampling.mode == SamplingMode::greedy) {
        body["temperature"] = 0.0;
        if (endpoint_.send_top_k) body["top_k"] = 1;
    } else {
        body["temperature"] = request.sampling.temperature;
        body["seed"] = request.sample_index;
    }
    return body;
}

std::string HttpChatClient::attempt(const ChatRequest& request) {
    httplib::Client client(scheme_host_port_);
    auto timeout = std::chrono::milliseconds(
        static_cast<long long>(endpoint_.timeout_seconds * 1000.0));
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);

    httplib::Headers headers;
    if (!endpoint_.auth_env.empty()) {
        const char* token = std::getenv(endpoint_.auth_env.c_str());
        if (token == nullptr || *token == '\0')
            throw ConfigError(fmt::format("auth env var {} is not set", endpoint_.auth_env));
        headers.emplace("Authorization", fmt::format("Bearer {}", token));
    }

    const std::string path = path_prefix_ + "/v1/chat/completions";
    auto res = client.Post(path, headers, request_body(request).dump(), "application/json");
    if (!res)
        throw TransportError(fmt::format("POST {}{} failed: {}", scheme_host_port_, path,
                                         httplib::to_string(res.error())));
    if (res->status == 429 || res->status >= 500)
        throw TransportError(fmt::format("POST {}{} returned HTTP {}", scheme_host_port_, path,
                                         res->status));
    if (res->status != 200)
        throw TransportError(fmt::format("POST {}{} returned HTTP {}: {}", scheme_host_port_,
                                         path, res->status, res->body));

    json parsed;
    try {
        parsed = json::parse(res->body);
    } catch (const json::exception& e) {
        throw TransportError(fmt::format("response body is not JSON: {}", e.what()));
    }
    if (!parsed.contains("choices") || !parsed["choices"].is_array() ||
        parsed["choices"].empty())
        throw TransportError("response has no choices");
    const auto& choice = parsed["choices"][0];
    if (!choice.contains("message") || !choice["message"].contains("content") ||
        !choice["message"]["content"].is_string())
        throw TransportError("response choice has no message content");
    return choice["message"]["content"].get<std::string>();
}

std::string HttpChatClient::complete(const ChatRequest& request) {
    request.validate();
    std::string last_error;
    for (int i = 0; i < endpoint_.retry.max_attempts; ++i) {
        if (i > 0 && !endpoint_.retry.backoff_ms.empty()) {
            std::size_t slot = std::min<std::size_t>(static_cast<std::size_t>(i) - 1,
                                                     endpoint_.retry.backoff_ms.size() - 1);
            std::this_thread::sleep_for(
                std::chrono::milliseconds(endpoint_.retry.backoff_ms[slot]));
        }
        try {
            return attempt(request);
        } catch (const TransportError& e) {
            last_error = e.what();
            // Client-side errors other than rate limiting will not heal on retry.
            if (last_error.find("HTTP 4") != std::string::npos &&
                last_error.find("HTTP 429") == std::string::npos)
                throw;
        }
    }
    throw TransportError(fmt::format("giving up after {} attempts: {}",
                                     endpoint_.retry.max_attempts, last_error));
}

ResponseCache::ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
}

json ResponseCache::fingerprint(const std::string& model_name, const ChatRequest& request) {
    return json{
        {"model", model_name},
        {"system_prompt", request.system_prompt},
        {"user_prompt", request.user_prompt},
        {"mode", sampling_mode_name(request.sampling.mode)},
        {"temperature", request.sampling.temperature},
        {"sample_index", request.sample_index},
    };
}

std::string ResponseCache::key_for(const std::string& model_name, const ChatRequest& request) {
    return sha256_hex(fingerprint(model_name, request).dump());
}

std::optional<ResponseCache::Entry> ResponseCache::lookup(const std::string& model_name,
                                                          const ChatRequest& request) const {
    const std::string key = key_for(model_name, request);
    const auto path = dir_ / (key + ".json");
    if (!std::filesystem::exists(path)) return std::nullopt;

    json doc;
    try {
        doc = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw CacheError(fmt::format("cache entry {} is not valid JSON: {}", path.string(),
                                     e.what()));
    }
    for (const char* field : {"key", "fingerprint", "response", "response_sha256", "fetched_at"})
        if (!doc.contains(field))
            throw CacheError(fmt::format("cache entry {} is missing '{}'", path.string(), field));
    if (doc["key"].get<std::string>() != key)
        throw CacheError(fmt::format("cache entry {} key does not match its filename",
                                     path.string()));
    if (doc["fingerprint"] != fingerprint(model_name, request))
        throw CacheError(fmt::format("cache entry {} fingerprint does not match the request",
                                     path.string()));
    Entry entry;
    entry.response = doc["response"].get<std::string>();
    entry.fetched_at = doc["fetched_at"].get<std::string>();
    if (sha256_hex(entry.response) != doc["response_sha256"].get<std::string>())
        throw CacheError(fmt::format("cache entry {} failed its integrity check", path.string()));
    return entry;
}

void ResponseCache::store(const std::string& model_name, const ChatRequest& request,
                          const Entry& entry) {
    const std::string key = key_for(model_name, request);
    json doc{
        {"key", key},
        {"fingerprint", fingerprint(model_name, request)},
        {"response", entry.response},
        {"response_sha256", sha256_hex(entry.response)},
        {"fetched_at", entry.fetched_at},
    };
    std::lock_guard<std::mutex> lock(write_mutex_);
    write_file(dir_ / (key + ".json"), doc.dump(2) + "\n");
}

CachedResult cached_complete(ResponseCache* cache, ChatBackend& backend,
                             const ChatRequest& request) {
    if (cache != nullptr) {
        if (auto hit = cache->lookup(backend.model_name(), request)) {
            return CachedResult{hit->response, true, hit->fetched_at};
        }
    }
    CachedResult result;
    result.text = backend.complete(request);
    result.cache_hit = false;
    result.fetched_at = now_utc_iso();
    if (cache != nullptr)
        cache->store(backend.model_name(), request, {result.text, result.fetched_at});
    return result;
}

}  // namespace difbench
