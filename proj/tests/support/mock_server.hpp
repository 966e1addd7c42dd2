// Copyright 2026 The pii-toolkit Authors
// SPDX-License-Identifier: Apache-2.0

// In-process chat-completions endpoint with request counting and a concurrency probe.

#pragma once

#include "json.hpp"

#include <atomic>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

namespace httplib {
class Server;
}

namespace pii::testing {

struct MockReply {
    int status = 200;
    std::string content;  // assistant message text when status is 200, raw body otherwise
};

class MockServer {
public:
    /// `attempt` counts requests with the same body, starting at 1.
    using Behavior = std::function<MockReply(const nlohmann::json& body, int attempt)>;

    explicit MockServer(Behavior behavior, int handler_delay_ms = 0);
    ~MockServer();
    MockServer(const MockServer&) = delete;
    MockServer& operator=(const MockServer&) = delete;

    std::string url() const;
    std::size_t requests() const { return requests_.load(); }
    int max_in_flight() const { return max_in_flight_.load(); }
    void reset_counters();

    /// Answer derived from the request bytes: same request, same answer.
    static std::string deterministic_answer(const std::string& body);

private:
    std::unique_ptr<httplib::Server> server_;
    std::thread thread_;
    int port_ = 0;
    Behavior behavior_;
    int delay_ms_;
    std::atomic<std::size_t> requests_{0};
    std::atomic<int> in_flight_{0};
    std::atomic<int> max_in_flight_{0};
    std::mutex mu_;
    std::map<std::string, int> attempts_;
};

}  // namespace pii::testing
