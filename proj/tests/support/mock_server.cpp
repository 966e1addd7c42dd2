// Copyright 2026 The pii-toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "mock_server.hpp"

#include "httplib.h"
#include "pii/digest.hpp"

#include <chrono>
#include <stdexcept>

namespace pii::testing {

using nlohmann::json;

MockServer::MockServer(Behavior behavior, int handler_delay_ms)
    : server_(std::make_unique<httplib::Server>()), behavior_(std::move(behavior)), delay_ms_(handler_delay_ms) {
    server_->new_task_queue = [] { return new httplib::ThreadPool(32); };
    server_->Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
        const int now = ++in_flight_;
        int seen = max_in_flight_.load();
        while (now > seen && !max_in_flight_.compare_exchange_weak(seen, now)) {
        }
        ++requests_;
        int attempt;
        {
            std::lock_guard lock(mu_);
            attempt = ++attempts_[sha256_hex(req.body)];
        }
        if (delay_ms_ > 0) std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms_));
        MockReply reply;
        try {
            reply = behavior_(json::parse(req.body), attempt);
        } catch (const std::exception& e) {
            reply = {400, e.what()};
        }
        res.status = reply.status;
        if (reply.status == 200) {
            const json body = {{"id", "mock"},
                               {"object", "chat.completion"},
                               {"choices", json::array({{{"index", 0},
                                                         {"message", {{"role", "assistant"}, {"content", reply.content}}},
                                                         {"finish_reason", "stop"}}})}};
            res.set_content(body.dump(), "application/json");
        } else {
            res.set_content(reply.content, "text/plain");
        }
        --in_flight_;
    });
    port_ = server_->bind_to_any_port("127.0.0.1");
    if (port_ <= 0) throw std::runtime_error("mock server could not bind");
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
}

MockServer::~MockServer() {
    server_->stop();
    if (thread_.joinable()) thread_.join();
}

std::string MockServer::url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }

void MockServer::reset_counters() {
    requests_ = 0;
    max_in_flight_ = 0;
    std::lock_guard lock(mu_);
    attempts_.clear();
}

std::string MockServer::deterministic_answer(const std::string& body) {
    const std::string h = sha256_hex(body);
    return (h[0] < '8' ? "Yes, there is. " : "No, there is not. ") + h.substr(0, 8);
}

}  // namespace pii::testing
