#pragma once

#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "difbench/mock_model.hpp"

namespace difbench {

// In-process OpenAI-compatible chat-completions endpoint backed by a
// MockChatModel. Listens on 127.0.0.1 on an ephemeral port.
class StubServer {
public:
    struct RecordedRequest {
        nlohmann::json body;
        std::string authorization;  // raw header value, empty if absent
    };

    StubServer(const Corpus& corpus, const PersonaSet& personas, MockBehavior behavior);
    ~StubServer();

    StubServer(const StubServer&) = delete;
    StubServer& operator=(const StubServer&) = delete;

    void start(int port = 0);  // 0 = pick an ephemeral port
    void stop();
    int port() const { return port_; }
    std::string base_url() const;

    MockChatModel& mock() { return *mock_; }

    // Respond `status` (with an empty error body) to the next n requests.
    void fail_next(int n, int status = 500);
    // Append a changing suffix to every response; breaks determinism on purpose.
    void set_nondeterministic(bool on);

    std::vector<RecordedRequest> recorded() const;
    int request_count() const;
    void clear_recorded();

private:
    struct Impl;
    std::unique_ptr<MockChatModel> mock_;
    std::unique_ptr<Impl> impl_;
    std::thread serve_thread_;
    int port_ = -1;
};

}  // namespace difbench
