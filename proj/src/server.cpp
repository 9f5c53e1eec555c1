#include "arec/server.hpp"

#include "httplib.h"

#include <chrono>
#include <stdexcept>

namespace arec {

using nlohmann::json;

HttpServer::HttpServer(Engine& engine, ServerOptions options)
    : engine_(engine), api_(engine), options_(std::move(options)), server_(std::make_unique<httplib::Server>()) {
    auto handler = [this](const httplib::Request& req, httplib::Response& res) {
        const auto r = api_.handle(req.method, req.path, req.params, req.body);
        res.status = r.status;
        res.set_content(r.body.dump(), "application/json");
    };
    if (options_.ui_dir) {
        if (!server_->set_mount_point("/ui", options_.ui_dir->string()))
            throw std::runtime_error("ui directory " + options_.ui_dir->string() + " does not exist");
    }
    server_->Get(R"(/(healthz|sessions|documents|admin)(/.*)?)", handler);
    server_->Post(R"(/(sessions|admin)(/.*)?)", handler);
    server_->set_error_handler([](const httplib::Request&, httplib::Response& res) {
        if (!res.body.empty()) return;
        res.set_content(json{{"error", {{"code", res.status == 404 ? "not_found" : "http_error"},
                                        {"message", httplib::status_message(res.status)}}}}
                            .dump(),
                        "application/json");
    });
}

HttpServer::~HttpServer() { stop(); }

void HttpServer::start() {
    if (running_) return;
    if (options_.port == 0) {
        port_ = server_->bind_to_any_port(options_.host);
        if (port_ < 0) throw std::runtime_error("cannot bind " + options_.host);
    } else {
        if (!server_->bind_to_port(options_.host, options_.port))
            throw std::runtime_error("cannot bind " + options_.host + ":" + std::to_string(options_.port));
        port_ = options_.port;
    }
    running_ = true;
    listener_ = std::thread([this] { server_->listen_after_bind(); });
    if (options_.adaptation_timer) timer_ = std::thread([this] { timer_loop(); });
}

void HttpServer::timer_loop() {
    // system_clock waits go through pthread_cond_timedwait, which thread
    // sanitizers understand; a clock jump only shifts one period.
    const auto period = std::chrono::duration_cast<std::chrono::system_clock::duration>(
        std::chrono::duration<double>(engine_.config().adaptation_period_seconds));
    std::unique_lock lock(mutex_);
    while (!cv_.wait_until(lock, std::chrono::system_clock::now() + period, [this] { return stopping_; })) {
        lock.unlock();
        try {
            const auto report = engine_.run_cycle();
            if (report.applied && options_.on_cycle) options_.on_cycle(report);
        } catch (const std::exception&) {
            // the next period retries; the failed cycle changed nothing
        }
        lock.lock();
    }
}

void HttpServer::stop() {
    {
        std::lock_guard lock(mutex_);
        if (stopping_ || !running_) {
            stopping_ = true;
            cv_.notify_all();
            return;
        }
        stopping_ = true;
    }
    cv_.notify_all();
    server_->stop();
    if (listener_.joinable()) listener_.join();
    if (timer_.joinable()) timer_.join();
}

void HttpServer::wait() {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [this] { return stopping_; });
}

HttpTransport::HttpTransport(const std::string& base_url)
    : base_url_(base_url), client_(std::make_unique<httplib::Client>(base_url)) {
    if (!client_->is_valid()) throw TransportError("invalid engine URL " + base_url);
    client_->set_connection_timeout(5);
    client_->set_read_timeout(120);
}

HttpTransport::~HttpTransport() = default;

ApiResponse HttpTransport::call(std::string_view method, const std::string& target, const json& body) {
    httplib::Result res;
    if (method == "GET") {
        res = client_->Get(target);
    } else if (method == "POST") {
        res = client_->Post(target, body.is_null() ? std::string("{}") : body.dump(), "application/json");
    } else {
        throw std::invalid_argument("unsupported method " + std::string(method));
    }
    if (!res) throw TransportError("engine unreachable at " + base_url_ + ": " + httplib::to_string(res.error()));
    ApiResponse out;
    out.status = res->status;
    try {
        out.body = res->body.empty() ? json::object() : json::parse(res->body);
    } catch (const json::parse_error&) {
        throw TransportError("engine at " + base_url_ + " returned a non-JSON body");
    }
    return out;
}

}  // namespace arec
