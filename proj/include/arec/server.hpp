#pragma once

#include "arec/api.hpp"

#include <condition_variable>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

namespace httplib {
class Server;
class Client;
}  // namespace httplib

namespace arec {

struct ServerOptions {
    std::string host = "127.0.0.1";
    int port = 8080;  // 0 picks a free port
    std::optional<std::filesystem::path> ui_dir;
    // Run adaptation cycles every config().adaptation_period_seconds.
    bool adaptation_timer = true;
    // Called with the report of every timer cycle that changed something.
    std::function<void(const CycleReport&)> on_cycle;
};

// HTTP front end over an Api, plus the periodic adaptation cycle.
class HttpServer {
public:
    HttpServer(Engine& engine, ServerOptions options);
    ~HttpServer();

    // Binds and starts serving in the background. Throws std::runtime_error if
    // the address cannot be bound.
    void start();
    int port() const { return port_; }
    // Stops serving and the timer; safe to call more than once.
    void stop();
    // Blocks until stop() is called from another thread.
    void wait();

private:
    void timer_loop();

    Engine& engine_;
    Api api_;
    ServerOptions options_;
    std::unique_ptr<httplib::Server> server_;
    std::thread listener_;
    std::thread timer_;
    std::mutex mutex_;
    std::condition_variable cv_;
    bool stopping_ = false;
    bool running_ = false;
    int port_ = 0;
};

class HttpTransport : public ApiTransport {
public:
    explicit HttpTransport(const std::string& base_url);
    ~HttpTransport() override;
    ApiResponse call(std::string_view method, const std::string& target, const nlohmann::json& body) override;

private:
    std::string base_url_;
    std::unique_ptr<httplib::Client> client_;
};

}  // namespace arec
