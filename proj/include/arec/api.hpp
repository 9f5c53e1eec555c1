#pragma once

#include "arec/engine.hpp"

#include "json.hpp"

#include <map>
#include <stdexcept>
#include <string>
#include <string_view>

namespace arec {

struct ApiResponse {
    int status = 200;
    nlohmann::json body;
};

// Routes HTTP-shaped requests to an Engine. Errors come back as
// {"error": {"code", "message"}} with 400, 404, 405 or 409.
class Api {
public:
    explicit Api(Engine& engine) : engine_(engine) {}

    ApiResponse handle(std::string_view method, std::string_view path,
                       const std::multimap<std::string, std::string>& params, std::string_view body);

    // `target` is a path with an optional percent-encoded query string.
    ApiResponse handle_target(std::string_view method, std::string_view target, std::string_view body);

private:
    ApiResponse route(std::string_view method, std::string_view path,
                      const std::multimap<std::string, std::string>& params, const nlohmann::json& body);

    Engine& engine_;
};

// How clients such as the simulation harness reach an engine.
class ApiTransport {
public:
    virtual ~ApiTransport() = default;
    // Throws TransportError when the engine cannot be reached.
    virtual ApiResponse call(std::string_view method, const std::string& target, const nlohmann::json& body) = 0;
};

class TransportError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InProcessTransport : public ApiTransport {
public:
    explicit InProcessTransport(Api& api) : api_(api) {}
    ApiResponse call(std::string_view method, const std::string& target, const nlohmann::json& body) override;

private:
    Api& api_;
};

std::string url_encode(std::string_view s);

}  // namespace arec
