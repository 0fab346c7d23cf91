#pragma once

#include <httplib.h>

#include <chrono>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace bladerunner::testing {

// Local HTTP server answering GET /face with a scripted sequence of
// responses (the last one repeats) and recording when each request arrived.
class StubServer {
public:
    struct Reply {
        int status = 200;
        std::string body;
    };

    explicit StubServer(std::vector<Reply> script) : script_(std::move(script)) {
        server_.Get("/face", [this](const httplib::Request&, httplib::Response& res) {
            std::lock_guard lock(mutex_);
            arrivals_.push_back(std::chrono::steady_clock::now());
            const Reply& reply = script_[std::min(arrivals_.size() - 1, script_.size() - 1)];
            res.status = reply.status;
            res.set_content(reply.body, "image/jpeg");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }

    ~StubServer() {
        server_.stop();
        if (thread_.joinable()) thread_.join();
    }

    StubServer(const StubServer&) = delete;
    StubServer& operator=(const StubServer&) = delete;

    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/face"; }

    std::vector<std::chrono::steady_clock::time_point> arrivals() const {
        std::lock_guard lock(mutex_);
        return arrivals_;
    }

private:
    std::vector<Reply> script_;
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
    mutable std::mutex mutex_;
    std::vector<std::chrono::steady_clock::time_point> arrivals_;
};

}  // namespace bladerunner::testing
