#include "difbench/stub_server.hpp"

#include <atomic>

#include <fmt/format.h>

#include "httplib.h"

#include "difbench/errors.hpp"

namespace difbench {

using nlohmann::json;

struct StubServer::Impl {
    httplib::Server server;
    mutable std::mutex mutex;
    std::vector<RecordedRequest> recorded;
    int fail_remaining = 0;
    int fail_status = 500;
    std::atomic<bool> nondeterministic{false};
    std::atomic<int> completion_counter{0};
};

StubServer::StubServer(const Corpus& corpus, const PersonaSet& personas,
                       MockBehavior behavior)
    : mock_(std::make_unique<MockChatModel>(corpus, personas, std::move(behavior))),
      impl_(std::make_unique<Impl>()) {
    impl_->server.Post("/v1/chat/completions", [this](const httplib::Request& req,
                                                      httplib::Response& res) {
        json body;
        try {
            body = json::parse(req.body);
        } catch (const json::exception&) {
            res.status = 400;
            res.set_content(R"({"error":{"message":"body is not JSON"}})", "application/json");
            return;
        }

        {
            std::lock_guard<std::mutex> lock(impl_->mutex);
            impl_->recorded.push_back({body, req.get_header_value("Authorization")});
            if (impl_->fail_remaining > 0) {
                --impl_->fail_remaining;
                res.status = impl_->fail_status;
                res.set_content(R"({"error":{"message":"injected failure"}})",
                                "application/json");
                return;
            }
        }

        try {
            if (!body.contains("messages") || !body["messages"].is_array() ||
                body["messages"].size() != 2)
                throw DataError("expected exactly a system and a user message");
            const auto& sys = body["messages"][0];
            const auto& user = body["messages"][1];
            if (sys.value("role", "") != "system" || user.value("role", "") != "user")
                throw DataError("messages must be [system, user]");

            double temperature = body.value("temperature", 0.0);
            ChatRequest request;
            request.system_prompt = sys.value("content", "");
            request.user_prompt = user.value("content", "");
            request.sampling.max_output_tokens = body.value("max_tokens", 64);
            if (temperature == 0.0) {
                request.sampling = SamplingParams::greedy(request.sampling.max_output_tokens);
                request.sample_index = 0;
            } else {
                request.sampling = SamplingParams::with_temperature(
                    temperature, request.sampling.max_output_tokens);
                request.sample_index = body.value("seed", 0);
            }

            std::string text = mock_->complete(request);
            if (impl_->nondeterministic.load())
                text += fmt::format(" [v{}]", impl_->completion_counter.fetch_add(1));

            json reply{
                {"id", fmt::format("chatcmpl-{}", impl_->completion_counter.fetch_add(1))},
                {"object", "chat.completion"},
                {"model", body.value("model", mock_->model_name())},
                {"choices",
                 json::array({json{{"index", 0},
                                   {"message", json{{"role", "assistant"}, {"content", text}}},
                                   {"finish_reason", "stop"}}})},
            };
            res.status = 200;
            res.set_content(reply.dump(), "application/json");
        } catch (const std::exception& e) {
            res.status = 400;
            res.set_content(json{{"error", json{{"message", e.what()}}}}.dump(),
                            "application/json");
        }
    });
}

StubServer::~StubServer() { stop(); }

void StubServer::start(int port) {
    if (port > 0) {
        if (!impl_->server.bind_to_port("127.0.0.1", port))
            throw TransportError(fmt::format("stub server failed to bind port {}", port));
        port_ = port;
    } else {
        port_ = impl_->server.bind_to_any_port("127.0.0.1");
    }
    if (port_ <= 0) throw TransportError("stub server failed to bind a port");
    serve_thread_ = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
}

void StubServer::stop() {
    if (serve_thread_.joinable()) {
        impl_->server.stop();
        serve_thread_.join();
    }
}

std::string StubServer::base_url() const { return fmt::format("http://127.0.0.1:{}", port_); }

void StubServer::fail_next(int n, int status) {
    std::lock_guard<std::mutex> lock(impl_->mutex);
    impl_->fail_remaining = n;
    impl_->fail_status = status;
}

void StubServer::set_nondeterministic(bool on) { impl_->nondeterministic.store(on); }

std::vector<StubServer::RecordedRequest> StubServer::recorded() const {
    std::lock_guard<std::mutex> lock(impl_->mutex);
    return impl_->recorded;
}

int StubServer::request_count() const {
    std::lock_guard<std::mutex> lock(impl_->mutex);
    return static_cast<int>(impl_->recorded.size());
}

void StubServer::clear_recorded() {
    std::lock_guard<std::mutex> lock(impl_->mutex);
    impl_->recorded.clear();
}

}  // namespace difbench
